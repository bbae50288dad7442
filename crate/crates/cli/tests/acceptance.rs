//! Acceptance suite. Each test prints one `acceptance N: PASS|FAIL` line;
//! run with `--nocapture` to see them.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use entropy_rigidity::barycenter::*;
use entropy_rigidity::entropy::*;
use entropy_rigidity::geometry::busemann::*;
use entropy_rigidity::geometry::*;
use entropy_rigidity::inequalities::*;
use entropy_rigidity::measures::*;
use entropy_rigidity::rng::{self, domain};
use serde_json::Value;

const SEED: u64 = 20_240_601;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!("acceptance {id:>2}: {} {name} [{detail}]", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "acceptance {id} ({name}) failed: {detail}");
}

fn real(n: usize) -> FactorSpec {
    FactorSpec::real(n).unwrap()
}

fn random_factors(index: u64) -> Vec<FactorSpec> {
    let mut r = rng::stream(SEED, domain::TEST_POINTS, index);
    let mut pick = |k: usize| ((rng::uniform01(&mut r) * k as f64) as usize).min(k - 1);
    let k = 1 + pick(4);
    (0..k)
        .map(|_| loop {
            let d = [1, 2, 4][pick(3)];
            let n = 3 + pick(6);
            if let Ok(f) = FactorSpec::new(n, d) {
                break f;
            }
        })
        .collect()
}

fn point(factors: &[FactorSpec], seed: u64, index: u64, scale: f64) -> ProductPoint<f64> {
    let mut r = rng::stream(seed, domain::TEST_POINTS, index);
    let spatial: Vec<Vec<f64>> = factors
        .iter()
        .map(|f| (0..f.n()).map(|_| scale * rng::standard_normal(&mut r)).collect())
        .collect();
    ProductPoint::from_spatial(&spatial)
}

fn direction(factors: &[FactorSpec], seed: u64, index: u64) -> FurstenbergPoint<f64> {
    let mut r = rng::stream(seed, domain::TEST_POINTS, 1 << 40 | index);
    FurstenbergPoint::new(factors.iter().map(|f| rng::unit_vector(&mut r, f.n())).collect()).unwrap()
}

fn along(metric: &ScaledProductMetric<f64>, x: &ProductPoint<f64>, coords: &[f64]) -> ProductPoint<f64> {
    let v = TangentVector::from_frame_coords(metric, x.clone(), coords).unwrap();
    exp_map(metric, x, &v).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn acceptance_01_optimal_metric() {
    let start = Instant::now();
    let (mut worst, mut worst_constraint) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let factors = random_factors(k);
        let opt = optimal_scales::<f64>(&factors).unwrap();
        let oracle = numeric_optimal_scales::<f64>(&factors, 1e-10).unwrap();
        worst = worst.max(rel(opt.h_min, oracle.h));
        for (a, b) in opt.alpha.iter().zip(&oracle.beta) {
            worst = worst.max(rel(*a, *b));
        }
        let volume: f64 = factors.iter().zip(&opt.alpha).map(|(f, a)| a.powi(f.n() as i32)).product();
        worst_constraint = worst_constraint.max((volume - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "closed-form optimum matches the numeric optimizer",
        worst < 1e-6 && worst_constraint < 1e-10 && secs < 60.0,
        format!("max rel diff {worst:.2e}, max |Π α^n - 1| {worst_constraint:.2e}, {secs:.2}s"),
    );
}

#[test]
fn acceptance_02_consistency_identities() {
    let mut worst = 0.0f64;
    for k in 0..20 {
        let factors = random_factors(k);
        let opt = optimal_scales::<f64>(&factors).unwrap();
        let n: usize = factors.iter().map(FactorSpec::n).sum();
        let from_scales = factors
            .iter()
            .zip(&opt.alpha)
            .map(|(f, a)| (f.entropy() as f64 / a).powi(2))
            .sum::<f64>()
            .sqrt();
        let product = (n as f64).sqrt()
            * factors
                .iter()
                .map(|f| (f.entropy() as f64 / (f.n() as f64).sqrt()).powf(f.n() as f64 / n as f64))
                .product::<f64>();
        worst = worst.max(rel(from_scales, opt.h_min)).max(rel(product, opt.h_min));
        for s in [opt.h_min * 1.1, 7.5, 20.0] {
            let (lhs, rhs) = product_assembly(&factors, s).unwrap();
            worst = worst.max(rel(lhs, rhs));
        }
    }
    verdict(2, "entropy and assembly identities", worst <= 1e-12, format!("max rel diff {worst:.2e}"));
}

#[test]
fn acceptance_03_busemann_calculus() {
    let f = [real(3), real(4)];
    let m = ScaledProductMetric::optimal(f.to_vec()).unwrap();
    let n = m.dimension();
    let mut grad_err = 0.0f64;
    let mut hess_err = 0.0f64;
    for k in 0..100 {
        let x = point(&f, SEED, k, 0.8);
        let th = direction(&f, SEED, k);
        let g = weighted_busemann_gradient(&m, &x, &th).unwrap();
        grad_err = grad_err.max((g.norm(&m) - 1.0).abs());
        for i in 0..2 {
            let gi = factor_busemann_frame_gradient(x.factor(i), th.factor(i));
            grad_err = grad_err.max((gi.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs());
        }
        let hess = weighted_busemann_hessian(&m, &x, &th).unwrap().to_dense();
        let b = |c: &[f64]| weighted_busemann(&m, &along(&m, &x, c), &th).unwrap();
        let h = 1e-4;
        let second = |v: &[f64]| {
            let s = |t: f64| v.iter().map(|c| c * t).collect::<Vec<_>>();
            (b(&s(h)) - 2.0 * b(&s(0.0)) + b(&s(-h))) / (h * h)
        };
        for a in 0..n {
            for c in a..n {
                let plus: Vec<f64> = (0..n).map(|i| ((i == a) as u8 + (i == c) as u8) as f64).collect();
                let fd = if a == c {
                    second(&plus) / 4.0
                } else {
                    let minus: Vec<f64> = (0..n).map(|i| (i == a) as u8 as f64 - (i == c) as u8 as f64).collect();
                    (second(&plus) - second(&minus)) / 4.0
                };
                hess_err = hess_err.max((fd - hess[a][c]).abs());
            }
        }
    }
    let mut cocycle = 0.0f64;
    for k in 0..10_000 {
        let (x, y, z) = (point(&f, SEED + 1, k, 1.0), point(&f, SEED + 2, k, 1.0), point(&f, SEED + 3, k, 1.0));
        let th = direction(&f, SEED + 4, k);
        for i in 0..2 {
            let (xi, yi, zi, ti) = (x.factor(i), y.factor(i), z.factor(i), th.factor(i));
            let gap = busemann_between(xi, yi, ti) + busemann_between(yi, zi, ti) - busemann_between(xi, zi, ti);
            cocycle = cocycle.max(gap.abs());
        }
    }
    verdict(
        3,
        "Busemann gradient, Hessian and cocycle",
        grad_err < 1e-10 && hess_err <= 1e-5 && cocycle <= 1e-10,
        format!("|grad|-1 {grad_err:.1e}, Hessian FD {hess_err:.1e}, cocycle {cocycle:.1e}"),
    );
}

fn weighted_ks(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let norm = |s: &[(f64, f64)]| {
        let total: f64 = s.iter().map(|p| p.1).sum();
        let mut v: Vec<(f64, f64)> = s.iter().map(|(x, w)| (*x, w / total)).collect();
        v.sort_by(|p, q| p.0.total_cmp(&q.0));
        v
    };
    let (a, b) = (norm(a), norm(b));
    let (mut i, mut j, mut fa, mut fb, mut d) = (0, 0, 0.0f64, 0.0f64, 0.0f64);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i].0 <= x {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 <= x {
            fb += b[j].1;
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    d
}

#[test]
fn acceptance_04_patterson_sullivan() {
    let n = 100_000;
    let f = [real(3), real(3)];
    let mut detail = Vec::new();

    let mut mass_ok = true;
    for k in 0..3 {
        let x = point(&f, SEED, k, 0.3);
        let (mean, _) = ps_total_mass(&x, n, SEED + k).unwrap();
        mass_ok &= (mean - 1.0).abs() < 3.0 / (n as f64).sqrt();
        detail.push(format!("mass {mean:.5}"));
    }

    let x = point(&f, SEED, 10, 0.4);
    let gamma = ProductIsometry::boost_to(&point(&f, SEED, 11, 0.4))
        .compose(&ProductIsometry::rotation(&[3, 3], 0, 0, 1, 0.9).unwrap());
    let moved = sample_ps(&gamma.apply_point(&x), n, SEED + 20).unwrap();
    let pushed = sample_ps(&x, n, SEED + 21).unwrap().pushforward(&gamma);
    let scale = (moved.ess() * pushed.ess() / (moved.ess() + pushed.ess())).sqrt();
    // per-factor first coordinate, Bonferroni over the two factors at 5%
    let critical = (-(0.05f64 / 4.0).ln() / 2.0).sqrt();
    let stats: Vec<f64> = (0..2)
        .map(|i| {
            let col = |m: &AtomicBoundaryMeasure| m.atoms().iter().map(|a| (a.theta.factor(i)[0], a.w)).collect::<Vec<_>>();
            scale * weighted_ks(&col(&moved), &col(&pushed))
        })
        .collect();
    let equivariance_ok = stats.iter().all(|s| *s < critical);
    detail.push(format!("KS {:.3}/{:.3} < {critical:.3}", stats[0], stats[1]));

    let center = FurstenbergPoint::normalized(vec![vec![1.0, 0.0, 0.0]; 2]).unwrap();
    let unit = ScaledProductMetric::new(f.to_vec(), vec![1.0, 1.0]).unwrap();
    let p = ProductPoint::basepoint(&f);
    let mut caps: Vec<(f64, f64)> = Vec::new();
    for t in [1.0, 2.0, 4.0, 8.0] {
        let c = t / 2f64.sqrt();
        let y = along(&unit, &p, &[c, 0.0, 0.0, c, 0.0, 0.0]);
        let nu = sample_ps_pushforward(&y, n, SEED).unwrap();
        caps.push(cap_mass_with_error(&nu, &center, 0.2).unwrap());
    }
    let monotone = caps.windows(2).all(|w| w[1].0 + 3.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt() >= w[0].0);
    let last = caps[3].0;
    if last < 0.95 {
        println!("acceptance  4: warning, cap mass at t = 8 is {last} < 0.95");
    }
    detail.push(format!("caps {:?}", caps.iter().map(|c| format!("{:.4}", c.0)).collect::<Vec<_>>()));
    verdict(
        4,
        "Patterson-Sullivan mass, equivariance and concentration",
        mass_ok && equivariance_ok && monotone && last >= 0.90,
        detail.join(", "),
    );
}

#[test]
fn acceptance_05_barycenter_solver() {
    let m = ScaledProductMetric::optimal(vec![real(3), real(4)]).unwrap();
    let n = m.dimension();
    let opts = BarycenterOptions::default();
    let tol = opts.tol;

    let mut init_spread = 0.0f64;
    for k in 0..20 {
        let sigma = sample_ps_pushforward(&point(m.factors(), SEED, k, 0.7), 200, k).unwrap();
        let inits: Vec<ProductPoint<f64>> = (0..3)
            .map(|j| {
                let mut r = rng::stream(SEED + 1, domain::TEST_POINTS, 8 * k + j);
                let dir = rng::unit_vector(&mut r, n);
                along(&m, &point(m.factors(), SEED + 2, k, 0.5), &dir.iter().map(|d| 2.0 * d).collect::<Vec<_>>())
            })
            .collect();
        let sols: Vec<_> = inits.iter().map(|i| barycenter(&m, &sigma, i, &opts).unwrap().point).collect();
        for a in &sols {
            init_spread = init_spread.max(product_distance(&m, a, &sols[0]).unwrap());
        }
    }

    let p = ProductPoint::basepoint(m.factors());
    let sym = natural_map(&m, &p, 5.0, &NaturalMapConfig::new(2000, 2000, SEED)).unwrap();
    let fixed = product_distance(&m, sym.point(), &p).unwrap();

    let scenario_opts = ScenarioOptions::default();
    let (mut checked, mut moved, mut index) = (0, 0, 0u64);
    while checked < 1000 {
        let sc = localization_scenario(&m, SEED, index, &scenario_opts).unwrap();
        index += 1;
        if !sc.premise() {
            continue;
        }
        checked += 1;
        if let Ok(r) = barycenter(&m, &sc.sigma, &sc.x, &opts) {
            if product_distance(&m, &r.point, &sc.x).unwrap() > 10.0 * tol {
                moved += 1;
            }
        }
    }
    verdict(
        5,
        "barycenter uniqueness, symmetry and localization",
        init_spread < 10.0 * tol && fixed <= tol && moved == checked,
        format!(
            "init spread {init_spread:.1e}, fixed point {fixed:.1e}, localization {moved}/{checked} (of {index} drawn)"
        ),
    );
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn acceptance_06_natural_map_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "factors": [[3, 1], [3, 1]],
            "beta": [1.3, 1.0 / 1.3],
            "s_multiplier": 1.1,
            "n_points": 20,
            "N_z": 10000,
            "N_theta": 10000,
            "seed": SEED,
            "eps": 1e-3,
            "max_distance": 2.0,
            "bound_slack": 0.1,
            "richardson_points": 3
        })
        .to_string(),
    )
    .unwrap();
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_rigidity"))
        .args(["jacobian-scan", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let code = out.status.code();
    let (header, rows) = read_table(&dir.path().join("jacobian_scan.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (ratio, rich) = (col("ratio"), col("richardson_rel_diff"));
    let ratios: Vec<f64> = rows.iter().map(|r| r[ratio].parse().unwrap()).collect();
    let richardson: Vec<f64> = rows.iter().filter(|r| !r[rich].is_empty()).map(|r| r[rich].parse().unwrap()).collect();
    let violations = ratios.iter().filter(|r| **r > 1.1).count();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let max_rich = richardson.iter().copied().fold(0.0, f64::max);
    verdict(
        6,
        "Jacobian bound on H3xH3",
        code == Some(0) && rows.len() == 20 && violations == 0 && richardson.len() == 3 && max_rich <= 0.05,
        format!(
            "exit {code:?}, {violations} violations, max |Jac|/bound {max_ratio:.3}, Richardson {max_rich:.2e}, {secs:.0}s"
        ),
    );
}

#[test]
fn acceptance_07_limits() {
    let f = [real(3), real(3)];
    let g_min = ScaledProductMetric::optimal(f.to_vec()).unwrap();
    let p = ProductPoint::basepoint(&f);
    let config = NaturalMapConfig::new(10_000, 10_000, SEED);
    let tol = config.barycenter.tol;
    let at_p = natural_map(&g_min, &p, 5.0, &config).unwrap();
    let fixed = product_distance(&g_min, at_p.point(), &p).unwrap();

    let beta = ScaledProductMetric::new(f.to_vec(), vec![1.3, 1.0 / 1.3]).unwrap();
    let y = along(&beta, &p, &[0.8, 0.3, 0.0, -0.5, 0.0, 0.6]);
    let seeds = 4;
    let mut means = Vec::new();
    let mut errs = Vec::new();
    let mut moving_max = 0.0f64;
    for s in [5.0, 10.0, 20.0, 50.0] {
        let d: Vec<f64> = (0..seeds)
            .map(|k| {
                let r = natural_map(&beta, &y, s, &NaturalMapConfig::new(10_000, 10_000, SEED + k)).unwrap();
                product_distance(&g_min, r.point(), &y).unwrap()
            })
            .collect();
        let mean = d.iter().sum::<f64>() / seeds as f64;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
        means.push(mean);
        errs.push((var / seeds as f64).sqrt());
        let mut moving = NaturalMapConfig::new(10_000, 10_000, SEED);
        moving.sigma = moving.sigma.with_frame(SigmaFrame::Moving);
        let r = natural_map(&beta, &y, s, &moving).unwrap();
        moving_max = moving_max.max(product_distance(&g_min, r.point(), &y).unwrap());
    }
    let decreasing = (0..3).all(|i| means[i + 1] <= means[i] + 3.0 * (errs[i].powi(2) + errs[i + 1].powi(2)).sqrt());
    verdict(
        7,
        "large-s limit of the natural map",
        fixed <= tol && means[3] < 0.2 && decreasing && moving_max <= 10.0 * tol,
        format!(
            "F_s(p) offset {fixed:.1e}; mean d(F_s(y), y) over {seeds} seeds at s = 5, 10, 20, 50: {} ± {}; moving-frame max {moving_max:.1e}",
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join("/"),
            errs.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join("/"),
        ),
    );
}

#[test]
fn acceptance_08_critical_exponent() {
    let cases = [vec![real(3)], vec![real(3), real(3)], vec![real(3), real(4)]];
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for f in cases {
        let m = ScaledProductMetric::new(f.clone(), vec![1.0; f.len()]).unwrap();
        let y = ProductPoint::basepoint(&f);
        let est = critical_exponent_estimate(&m, &y, (0.5, 10.0), &CriticalExponentOptions::default()).unwrap();
        let h = product_entropy(&m);
        worst = worst.max(rel(est, h));
        detail.push(format!("{est:.4} vs {h:.4}"));
    }
    verdict(8, "critical exponent equals entropy", worst <= 0.02, format!("{}, max rel {worst:.4}", detail.join(", ")));
}

#[test]
fn acceptance_09_matrix_inequalities() {
    let pairs = [(3, 1), (4, 1), (4, 2), (8, 4)];
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    let mut max_dist = 0.0f64;
    let mut max_gap = 0.0f64;
    for (k, (n, d)) in pairs.into_iter().enumerate() {
        let r = scan_lemma55(n, d, 100_000, SEED + k as u64).unwrap();
        violations += r.violations;
        max_ratio = max_ratio.max(r.max_ratio);
        let b = fuzz_block_det(100_000, SEED + k as u64, 1e-12).unwrap();
        violations += b.violations;
        let mx = maximize_functional(n, d, SEED + k as u64, 20_000).unwrap();
        max_dist = max_dist.max(mx.distance_to_identity);
        max_gap = max_gap.max((mx.value - mx.bound).abs());
    }
    let s = build_complex_structures(2, 1).unwrap();
    let t: f64 = 0.05;
    let h = nalgebra_diag(&[t, 1.0 - t]);
    let two_d = bcg_functional(&h, &s).unwrap();
    let counterexample = two_d > 2.0 && bcg_bound(2, 1).is_err();
    verdict(
        9,
        "determinant functional and block determinant inequalities",
        violations == 0 && max_dist < 1e-4 && max_gap < 1e-8 && counterexample,
        format!(
            "{violations} violations, max ratio {max_ratio:.6}, maximizer distance {max_dist:.1e}, value gap {max_gap:.1e}, n=2 value {two_d:.3} > 2"
        ),
    );
}

fn nalgebra_diag(d: &[f64]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(d))
}

fn run_cli(args: &[&str], out: &Path, threads: &str) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_rigidity"))
        .args(args)
        .args(["--threads", threads, "--out"])
        .arg(out)
        .output()
        .unwrap()
        .status
        .code()
}

fn outputs(dir: &Path) -> Vec<(String, Value)> {
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&p).unwrap();
            let value = if name == "report.json" {
                let mut v: Value = serde_json::from_str(&text).unwrap();
                v.as_object_mut().unwrap().remove("wall_time_s");
                v
            } else {
                Value::String(text)
            };
            (name, value)
        })
        .collect()
}

#[test]
fn acceptance_10_determinism() {
    let beta = "1.3,0.7692307692307692";
    let commands: Vec<Vec<&str>> = vec![
        vec!["optimal-metric", "--factors", "3,4:2,8:4"],
        vec!["entropy", "--factors", "3,4", "--s-bracket", "1,8"],
        vec!["ps-concentration", "--factors", "3,3", "--n", "5000", "--seed", "3"],
        vec!["barycenter", "--factors", "3,3", "--beta", beta, "--s-multiplier", "1.2", "--n-z", "800", "--n-theta", "800", "--seed", "4"],
        vec!["jacobian-scan", "--factors", "3,3", "--beta", beta, "--s-multiplier", "1.1", "--n-points", "2", "--n-z", "300", "--n-theta", "300", "--seed", "5"],
        vec!["lemma55", "--n", "4", "--d", "2", "--trials", "3000", "--seed", "6"],
        vec!["blockdet", "--trials", "3000", "--seed", "7"],
    ];
    let mut failures = Vec::new();
    for args in &commands {
        let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
        let codes: Vec<_> = dirs
            .iter()
            .zip(["1", "2", "2"])
            .map(|(d, t)| run_cli(args, d.path(), t))
            .collect();
        let results: Vec<_> = dirs.iter().map(|d| outputs(d.path())).collect();
        if codes.iter().any(|c| *c != Some(0)) || results[0] != results[1] || results[1] != results[2] {
            failures.push(format!("{} {codes:?}", args[0]));
        }
    }
    verdict(
        10,
        "bit-identical outputs across reruns and thread counts",
        failures.is_empty(),
        if failures.is_empty() { format!("{} subcommands", commands.len()) } else { failures.join("; ") },
    );
}
