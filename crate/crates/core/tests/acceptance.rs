//! End-to-end acceptance checks. Runs every criterion, prints one
//! `PASS`/`FAIL` line each (details indented below it) and exits non-zero
//! if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;

use subdiff::harness::{manufactured_problem, run_study, ConvergenceReport, Reference, StudySpec};
use subdiff::inequality_lab::{gronwall_suite, identity_suite, lemma_suite, CheckRecord};
use subdiff::stepper::{run, Forcing, ProblemSpec, SchemeKind, SchemeSpec, Startup};
use subdiff::SpectralSpace;

const SEED: u64 = 20_240_611;

// self-convergence setup
const SELF_DEGREE: usize = 512;
const SELF_REF_TAU: f64 = 1.0 / 4096.0;
const SELF_GRID: [f64; 5] = [
    1.0 / 32.0,
    1.0 / 64.0,
    1.0 / 128.0,
    1.0 / 256.0,
    1.0 / 512.0,
];

const FIRST_ORDER_WINDOW: (f64, f64) = (0.90, 1.20);
const FIRST_ORDER_ERR_REL: f64 = 0.25;
const FIRST_ORDER_ERRORS_B02: [f64; 5] = [3.6747e-3, 1.7904e-3, 8.7440e-4, 4.2187e-4, 1.9670e-4];
const FIRST_ORDER_ERRORS_B09: [f64; 5] =
    [1.85544e-2, 9.22270e-3, 4.54197e-3, 2.19854e-3, 1.02610e-3];

const SECOND_ORDER_WINDOW_B09: (f64, f64) = (1.85, 2.05);
const SECOND_ORDER_WINDOW_B02: (f64, f64) = (1.00, 1.30);
const SECOND_ORDER_ERR_REL: f64 = 0.30;
const SECOND_ORDER_ERRORS_B09: [f64; 5] = [4.9601e-3, 1.2854e-3, 3.3088e-4, 8.4300e-5, 2.1181e-5];

// manufactured rates
const MMS_DEGREE: usize = 64;
const MMS_BETAS: [f64; 3] = [0.2, 0.5, 0.8];
const MMS_ORDER_TOL: f64 = 0.15;

// lab suites
const IDENTITY_SEQUENCES: usize = 1000;
const IDENTITY_STEPS: usize = 128;
const LEMMA_COUNT: usize = 500;
const GRONWALL_SCENARIOS: usize = 500;

// stability
const STABILITY_DEGREE: usize = 64;
const STABILITY_STEPS: usize = 1024;
const STABILITY_BETAS: [f64; 3] = [0.2, 0.5, 0.9];
const STABILITY_TAUS: [f64; 3] = [1.0 / 1024.0, 1.0 / 16.0, 1.0];
const STABILITY_REL_TOL: f64 = 1e-10;

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn reaction_study(beta: f64, scheme: SchemeKind) -> ConvergenceReport {
    let pi = std::f64::consts::PI;
    let problem = ProblemSpec::new(
        1.0,
        beta,
        1.0,
        Arc::new(move |x| (2.0 * pi * x).sin()),
        Forcing::Nonlinear {
            f: Arc::new(|u| u + u * u),
            df: Arc::new(|u| 1.0 + 2.0 * u),
        },
    )
    .expect("valid problem");
    let spec = StudySpec {
        problem,
        scheme,
        startup: Startup::RefinedFirstStep(64),
        degree: SELF_DEGREE,
        tau_grid: SELF_GRID.to_vec(),
        reference: Reference::SelfReference {
            degree: SELF_DEGREE,
            tau: SELF_REF_TAU,
        },
        eval_time: 1.0,
        label: format!("u + u^2, beta = {beta}"),
    };
    run_study(&spec).expect("study runs")
}

fn check_orders(out: &mut Outcome, label: &str, report: &ConvergenceReport, window: (f64, f64)) {
    let orders = report.orders();
    let ok = orders.len() == SELF_GRID.len() - 1
        && orders.iter().all(|o| (window.0..=window.1).contains(o));
    out.check(
        ok,
        format!(
            "{label}: orders {} in [{}, {}]",
            fmt_list(&orders),
            window.0,
            window.1
        ),
    );
}

fn check_errors(
    out: &mut Outcome,
    label: &str,
    report: &ConvergenceReport,
    expected: &[f64],
    rel: f64,
) {
    let errors = report.errors();
    let worst = errors
        .iter()
        .zip(expected)
        .map(|(e, x)| ((e - x) / x).abs())
        .fold(0.0, f64::max);
    out.check(
        worst <= rel,
        format!(
            "{label}: errors {} vs expected {} (worst relative deviation {:.3}, allowed {rel})",
            fmt_list(&errors),
            fmt_list(expected),
            worst
        ),
    );
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn first_order_self_convergence() -> Outcome {
    let mut out = Outcome::new();
    for (beta, expected) in [(0.2, FIRST_ORDER_ERRORS_B02), (0.9, FIRST_ORDER_ERRORS_B09)] {
        let report = reaction_study(beta, SchemeKind::SemiImplicit1);
        let label = format!("beta = {beta}");
        check_orders(&mut out, &label, &report, FIRST_ORDER_WINDOW);
        check_errors(&mut out, &label, &report, &expected, FIRST_ORDER_ERR_REL);
    }
    out
}

fn second_order_self_convergence() -> Outcome {
    let mut out = Outcome::new();
    let report = reaction_study(0.9, SchemeKind::SemiImplicit2);
    check_orders(&mut out, "beta = 0.9", &report, SECOND_ORDER_WINDOW_B09);
    check_errors(
        &mut out,
        "beta = 0.9",
        &report,
        &SECOND_ORDER_ERRORS_B09,
        SECOND_ORDER_ERR_REL,
    );
    let report = reaction_study(0.2, SchemeKind::SemiImplicit2);
    check_orders(&mut out, "beta = 0.2", &report, SECOND_ORDER_WINDOW_B02);
    out
}

fn manufactured_rates() -> Outcome {
    let mut out = Outcome::new();
    let grid: Vec<f64> = (4..=9).map(|k| 2f64.powi(-k)).collect();
    for beta in MMS_BETAS {
        let cases = [
            (1.0 + beta, SchemeKind::LinearP1, 1.0),
            (2.0 + beta, SchemeKind::LinearP2, 2.0),
            (beta + 0.6, SchemeKind::LinearP1, 0.6),
        ];
        for (sigma, scheme, expected) in cases {
            let m = manufactured_problem(sigma, beta, 1.0, 1.0).expect("sigma > beta");
            let spec = StudySpec {
                problem: m.problem,
                scheme,
                startup: Startup::default(),
                degree: MMS_DEGREE,
                tau_grid: grid.clone(),
                reference: Reference::Exact(m.exact),
                eval_time: 1.0,
                label: String::new(),
            };
            let report = run_study(&spec).expect("study runs");
            let finest = *report.orders().last().expect("at least two rows");
            out.check(
                (finest - expected).abs() <= MMS_ORDER_TOL,
                format!(
                    "beta = {beta}, sigma = {sigma:.2}, {scheme:?}: finest-pair order {finest:.3}, expected {expected} +- {MMS_ORDER_TOL}"
                ),
            );
        }
    }
    out
}

fn records_outcome(records: &[CheckRecord]) -> Outcome {
    let mut out = Outcome::new();
    for r in records.iter().filter(|r| !r.pass) {
        out.check(false, r.csv_line());
    }
    out.pass &= !records.is_empty();
    out.details.push(format!(
        "{} of {} checks passed",
        records.iter().filter(|r| r.pass).count(),
        records.len()
    ));
    out
}

fn kernel_identity() -> Outcome {
    let records = identity_suite(SEED, IDENTITY_SEQUENCES, IDENTITY_STEPS).expect("suite runs");
    let mut out = records_outcome(&records);
    let worst = records.iter().map(|r| r.value).fold(0.0, f64::max);
    out.check(
        records.len() == 9,
        format!("9 orders x {IDENTITY_SEQUENCES} sequences, worst scaled residual {worst:.3e}"),
    );
    out
}

fn coefficient_lemmas() -> Outcome {
    let records = lemma_suite(LEMMA_COUNT).expect("suite runs");
    let mut out = records_outcome(&records);
    let sweep = records
        .iter()
        .filter(|r| r.name == "mittag_leffler_kernel_bound")
        .count();
    let min_slack = records
        .iter()
        .filter(|r| r.name == "mittag_leffler_kernel_bound")
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    out.check(
        sweep == 18,
        format!("kernel bound sweep over {sweep} cases, minimum slack {min_slack:.3e}"),
    );
    out
}

fn gronwall_bound() -> Outcome {
    let records = gronwall_suite(SEED, GRONWALL_SCENARIOS).expect("suite runs");
    let mut out = records_outcome(&records);
    let random = records
        .iter()
        .filter(|r| r.name == "gronwall_random")
        .count();
    let large = records
        .iter()
        .filter(|r| r.name == "gronwall_zero_coupling_large_step")
        .count();
    out.check(
        random >= GRONWALL_SCENARIOS && large > 0,
        format!("{random} random scenarios, {large} zero-coupling scenarios with tau = 10"),
    );
    out
}

fn homogeneous_stability() -> Outcome {
    let mut out = Outcome::new();
    let space = SpectralSpace::new(STABILITY_DEGREE).expect("space");
    let pi = std::f64::consts::PI;
    let u0 =
        move |x: f64| (pi * x).sin() + 0.5 * (6.0 * pi * x).sin() + 0.3 * (x * x - 1.0) * x.exp();
    for scheme in [SchemeKind::LinearP1, SchemeKind::LinearP2] {
        for beta in STABILITY_BETAS {
            for tau in STABILITY_TAUS {
                let problem = ProblemSpec::new(
                    1.0,
                    beta,
                    tau * STABILITY_STEPS as f64,
                    Arc::new(u0),
                    Forcing::Linear(Arc::new(|_, _| 0.0)),
                )
                .expect("valid problem");
                let history =
                    run(&problem, SchemeSpec::new(scheme, STABILITY_STEPS), &space).expect("run");
                let norms: Vec<f64> = history
                    .levels()
                    .iter()
                    .map(|l| space.modal_l2_norm(l))
                    .collect();
                let (k, growth) = norms
                    .windows(2)
                    .enumerate()
                    .map(|(k, w)| (k + 1, (w[1] - w[0]) / w[0]))
                    .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
                let sup = norms.iter().copied().fold(0.0, f64::max) / norms[0];
                out.check(
                    growth <= STABILITY_REL_TOL,
                    format!(
                        "{scheme:?}, beta = {beta}, tau = {tau}: largest step-to-step relative change {growth:.3e} at k = {k}, max |u^k| / |u^0| = {sup:.6}"
                    ),
                );
            }
        }
    }
    out
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        (
            "first-order self-convergence, f(u) = u + u^2",
            first_order_self_convergence,
        ),
        (
            "second-order self-convergence, f(u) = u + u^2",
            second_order_self_convergence,
        ),
        ("manufactured-solution temporal rates", manufactured_rates),
        ("inverse-kernel identity", kernel_identity),
        (
            "weight inequalities, closed forms, kernel bound",
            coefficient_lemmas,
        ),
        ("fractional Gronwall bound", gronwall_bound),
        ("homogeneous L2 stability", homogeneous_stability),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = f();
        println!(
            "criterion {} [{}] {name} ({:.1}s)",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for d in &outcome.details {
            println!("    {d}");
        }
        failed += usize::from(!outcome.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
