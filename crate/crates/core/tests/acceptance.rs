//! Acceptance run: every criterion at its stated tolerance, one PASS/FAIL line each.

use std::process::ExitCode;

use ballconv::special::{RadialTable, ZernikeBasis};
use ballconv::verify::{
    check_conv_correctness, check_gradients, check_moment_fitting, check_orthogonality, check_pinv,
    check_radial_equivariance, check_rotation_equivariance, check_spherical_baseline, check_symmetry,
    classification_checks, classification_run, Check,
};

const SEED: u64 = 0;

fn report(id: usize, title: &str, checks: &[Check]) -> bool {
    let ok = checks.iter().all(|c| c.passed);
    let detail: Vec<String> = checks
        .iter()
        .map(|c| format!("{} = {:.3e} {} {:.1e}", c.name, c.measured, c.relation.symbol(), c.threshold))
        .collect();
    println!("{} criterion {id:>2} {title}: {}", if ok { "PASS" } else { "FAIL" }, detail.join("; "));
    ok
}

fn run(id: usize, title: &str, checks: ballconv::Result<Vec<Check>>) -> bool {
    match checks {
        Ok(c) => report(id, title, &c),
        Err(e) => {
            println!("FAIL criterion {id:>2} {title}: error: {e}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run(1, "basis orthogonality", check_orthogonality(&ZernikeBasis::with_radial_table(RadialTable::new(6))));
    ok &= run(2, "moment fitting", check_moment_fitting(SEED));
    ok &= run(3, "pseudo-inverse", check_pinv(SEED));
    ok &= run(4, "rotation equivariance", check_rotation_equivariance(SEED));
    ok &= run(5, "convolution correctness", check_conv_correctness(SEED));
    ok &= run(6, "radial translation equivariance", check_radial_equivariance(SEED));
    ok &= run(7, "axial symmetry", check_symmetry(SEED));
    ok &= run(8, "gradient checks", check_gradients(SEED));

    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().expect("thread pool");
    match pool.install(|| classification_run(SEED)) {
        Ok(run) => {
            let checks = classification_checks(&run);
            let (cls, rob): (Vec<Check>, Vec<Check>) =
                checks.into_iter().partition(|c| c.name.starts_with("classification"));
            ok &= report(9, "toy classification", &cls);
            ok &= report(10, "robustness to point removal", &rob);
        }
        Err(e) => {
            println!("FAIL criterion  9 toy classification: error: {e}");
            println!("FAIL criterion 10 robustness to point removal: error: {e}");
            ok = false;
        }
    }
    ok &= run(11, "spherical convolution baseline", check_spherical_baseline(SEED));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
