//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riesz_cli::{check_lemmas, run_scenario, ExpectRegistry, Overrides, Scenario};
use riesz_core::convergence::{self as cv, CheckerConfig, DoubleMode, Kind, TraceSpec};
use riesz_core::fremlin::{self, CertificateKind, SearchOptions};
use riesz_core::oracle::{self, AuditClaim, AuditStatus, ClaimId};
use riesz_core::rational::{frac, int, Rational};
use riesz_core::topology::{self, SolidNbhd, TensorNbhd};
use riesz_core::{Element, Index, NormTag, Space, SpaceRef, Status, TraceIndex, UnitSpec};
use serde_json::json;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

// 1 ------------------------------------------------------------------------

fn algebra_audits() -> Outcome {
    let start = Instant::now();
    let mut cases = 0u128;
    for id in [
        ClaimId::WedgeLowerBound,
        ClaimId::MixedUpperBound,
        ClaimId::Dichotomy,
        ClaimId::CrossNorm,
        ClaimId::DisjointnessPreservation,
    ] {
        let claim = AuditClaim::exhaustive(id);
        ensure(claim.dims == vec![(2, 2), (3, 3)], || "unexpected default dims".into())?;
        let r = oracle::audit(&claim).map_err(|e| e.to_string())?;
        ensure(
            r.status == AuditStatus::VerifiedOnSpace && r.witnesses.is_empty(),
            || format!("{id}: {} with {} witnesses", r.status, r.witnesses.len()),
        )?;
        cases += r.cases;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("5 claims, {cases} cases, 0 violations, {secs:.1}s"))
}

// 2 ------------------------------------------------------------------------

/// Entrywise `min(a_i b_j, c_i d_j)` and `min(a_i, c_i)·min(b_j, d_j)` in
/// plain integers.
fn wedge_by_hand(a: &[i64], b: &[i64], c: &[i64], d: &[i64]) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let lhs = a
        .iter()
        .zip(c)
        .map(|(ai, ci)| b.iter().zip(d).map(|(bj, dj)| (ai * bj).min(ci * dj)).collect())
        .collect();
    let rhs = a
        .iter()
        .zip(c)
        .map(|(ai, ci)| b.iter().zip(d).map(|(bj, dj)| *ai.min(ci) * *bj.min(dj)).collect())
        .collect();
    (lhs, rhs)
}

fn wedge_equality() -> Outcome {
    let w = oracle::bundled_wedge_witness().map_err(|e| e.to_string())?;
    let (holds, lhs, rhs) = oracle::evaluate(&w, ClaimId::WedgeEquality).map_err(|e| e.to_string())?;
    let (hl, hr) = wedge_by_hand(&[2, 1], &[1, 3], &[1, 2], &[2, 1]);
    let as_json = |m: &Vec<Vec<i64>>| {
        json!(m
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>())
    };
    ensure(!holds, || "bundled witness does not falsify".into())?;
    ensure(lhs == as_json(&hl) && lhs == json!([["2", "1"], ["1", "2"]]), || {
        format!("lhs {lhs}")
    })?;
    ensure(rhs == as_json(&hr) && rhs == json!([["1", "1"], ["1", "1"]]), || {
        format!("rhs {rhs}")
    })?;

    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = check_lemmas(20, 1, out.path(), &ExpectRegistry::default()).map_err(|e| e.to_string())?;
    ensure(report.exit_code() == 0, || "check-lemmas exit code is not 0".into())?;
    ensure(
        report.status_of(ClaimId::WedgeEquality) == Some(AuditStatus::Falsified),
        || "wedge_equality not falsified".into(),
    )?;
    let exhaustive = report
        .audits
        .iter()
        .find(|a| a.id == "wedge_equality:exhaustive")
        .ok_or("missing exhaustive wedge audit")?;
    ensure(
        !exhaustive.result.witnesses.is_empty() && exhaustive.witnesses_revalidated,
        || "wedge witness missing or not re-validated".into(),
    )?;
    let ledger = std::fs::read_to_string(out.path().join("reports/audit-ledger.json")).map_err(|e| e.to_string())?;
    ensure(ledger.contains("\"falsified\""), || {
        "ledger lacks the falsified entry".into()
    })?;
    Ok("falsified; bundled witness lhs [[2,1],[1,2]] != rhs [[1,1],[1,1]]".into())
}

// 3 ------------------------------------------------------------------------

fn remark_linf() -> Outcome {
    let e = Space::linf("E");
    let t = Space::tensor("EE", &e, &e).map_err(|x| x.to_string())?;
    let u = TraceSpec::scaled_basis(&e, cv::Coef::parse("n").unwrap());
    let v = TraceSpec::scaled_basis(&e, cv::Coef::parse("1/n").unwrap());
    let cfg = CheckerConfig::new(&e, 50, 10, frac(1, 10));
    let fv = cv::is_un_null(&v, &cfg).map_err(|x| x.to_string())?;
    ensure(fv.status == Status::Pass, || "factor check on v failed".into())?;
    for cp in &fv.trace_tail {
        let TraceIndex::Single(n) = cp.index else {
            return Err("bad index".into());
        };
        ensure(cp.value == frac(1, n as i64), || format!("rho(v_{n}) = {}", cp.value))?;
    }
    let ct = cv::tensor_config(&cfg, &cfg, 50, 50, frac(1, 10));
    let dt = cv::tensor_double_trace(&t, &u, &v).map_err(|x| x.to_string())?;
    let tv = cv::check_double(Kind::Un, &dt, &ct, DoubleMode::Diagonal).map_err(|x| x.to_string())?;
    ensure(tv.status == Status::Fail && tv.trace_tail.len() == 50, || {
        "tensor check did not fail on 50 indices".into()
    })?;
    ensure(tv.trace_tail.iter().all(|c| c.value == int(1)), || {
        "tensor values are not all 1".into()
    })?;

    let out = tempfile::tempdir().map_err(|x| x.to_string())?;
    let s =
        Scenario::load(&scenarios_dir().join("remark-linf.json"), &Overrides::default()).map_err(|x| x.to_string())?;
    let r = run_scenario(&s, out.path()).map_err(|x| x.to_string())?;
    let uv = r
        .checks
        .iter()
        .find(|c| c.id == "uv-un")
        .ok_or("scenario lacks uv-un")?;
    ensure(uv.status == "fail" && uv.matches && r.exit_code() == 0, || {
        "scenario expectations not met".into()
    })?;
    Ok(
        "rho(v_n) = 1/n on n = 41..50 (pass); rho(u_n (x) v_n) = 1 at n = 1..50 (expected fail); scenario exit 0"
            .into(),
    )
}

// 4 ------------------------------------------------------------------------

fn all_coefs() -> Vec<&'static str> {
    cv::FAST_NULL_COEFS
        .iter()
        .chain(&cv::PERSISTENT_COEFS)
        .chain(&cv::SLOW_NULL_COEFS)
        .copied()
        .collect()
}

/// Max over coordinates of `|x_n(k)|` below `tol` on the whole window.
fn pointwise_by_hand(t: &TraceSpec, cfg: &CheckerConfig) -> Result<bool, String> {
    for n in cfg.window_range() {
        let x = cv::trace_eval(t, n).map_err(|e| e.to_string())?;
        for k in 1..=t.space.dim().unwrap() as u32 {
            let q = x.get(Index::At(k));
            if q >= cfg.tol || -q >= cfg.tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn lemma1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let tols = [frac(1, 100), frac(1, 10), frac(1, 2)];
    let (mut null, mut total) = (0, 0);
    for i in 0..200 {
        let k = Space::numbered_grid("K", rng.gen_range(1..=5)).unwrap();
        let t = cv::random_trace(&k, &all_coefs(), &mut rng).map_err(|e| e.to_string())?;
        let cfg = CheckerConfig::new(&k, rng.gen_range(20..=200), rng.gen_range(1..=20), tols[i % 3].clone());
        let uaw = cv::is_uaw_null(&t, &cfg).map_err(|e| e.to_string())?.passed();
        let pw = cv::is_pointwise_null(&t, &cfg).map_err(|e| e.to_string())?.passed();
        let by_hand = pointwise_by_hand(&t, &cfg)?;
        ensure(uaw == pw && pw == by_hand, || {
            format!("trace {i}: uaw {uaw}, pointwise {pw}, by hand {by_hand}")
        })?;
        let un = cv::is_un_null(&t, &cfg).map_err(|e| e.to_string())?.passed();
        let norm = cv::is_norm_null(&t, &cfg).map_err(|e| e.to_string())?.passed();
        ensure(un == norm, || format!("trace {i}: un {un}, norm {norm}"))?;
        null += uaw as usize;
        total += 1;
    }
    Ok(format!("{total} traces agree ({null} null, {} not)", total - null))
}

// 5 ------------------------------------------------------------------------

fn random_element(space: &SpaceRef, rng: &mut ChaCha8Rng) -> Element {
    let n = space.dim().unwrap_or(5);
    let vals: Vec<Rational> = (0..n)
        .map(|_| frac(rng.gen_range(-8..=8), rng.gen_range(1..=4)))
        .collect();
    Element::from_values(space, &vals).unwrap()
}

fn metric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let menu: Vec<&str> = cv::FAST_NULL_COEFS
        .iter()
        .chain(&cv::PERSISTENT_COEFS)
        .copied()
        .collect();
    let seqs = [
        Space::seq("S1", NormTag::L1),
        Space::seq("S2", NormTag::L2),
        Space::seq("S0", NormTag::Sup),
    ];
    let mut null = 0;
    for i in 0..200 {
        let space = if i % 2 == 0 {
            Space::numbered_grid("K", rng.gen_range(1..=5)).unwrap()
        } else {
            seqs[i % 3].clone()
        };
        let t = cv::random_trace(&space, &menu, &mut rng).map_err(|e| e.to_string())?;
        let cfg = CheckerConfig::new(&space, 200, 10, frac(1, 100));
        let d = cv::is_metric_null(&t, &cfg).map_err(|e| e.to_string())?.passed();
        let uaw = cv::is_uaw_null(&t, &cfg).map_err(|e| e.to_string())?.passed();
        ensure(d == uaw, || format!("trace {i}: d-null {d}, uaw-null {uaw}"))?;
        null += d as usize;
    }
    for i in 0..1000 {
        let space = if i % 2 == 0 {
            Space::numbered_grid("K", 4).unwrap()
        } else {
            seqs[i % 3].clone()
        };
        let cfg = CheckerConfig::new(&space, 1, 1, int(1));
        let (x, y, z) = (
            random_element(&space, &mut rng),
            random_element(&space, &mut rng),
            random_element(&space, &mut rng),
        );
        let d = |a: &Element, b: &Element| cv::uaw_metric(a, b, &cfg).unwrap();
        ensure(d(&x, &z) <= d(&x, &y) + d(&y, &z), || {
            format!("triangle fails on triple {i}")
        })?;
        ensure(d(&x.add(&z).unwrap(), &y.add(&z).unwrap()) == d(&x, &y), || {
            format!("translation fails on triple {i}")
        })?;
    }
    Ok(format!(
        "200 traces agree ({null} null); 1000 triples: triangle and translation exact"
    ))
}

// 6 ------------------------------------------------------------------------

fn random_solid(space: &SpaceRef, rng: &mut ChaCha8Rng) -> SolidNbhd {
    let n = space.dim().unwrap();
    let unit = if rng.gen_bool(0.5) {
        UnitSpec::ConstantOne
    } else {
        let vals: Vec<Rational> = (0..n)
            .map(|_| frac(rng.gen_range(1..=8), rng.gen_range(1..=4)))
            .collect();
        UnitSpec::Explicit(Element::from_values(space, &vals).unwrap())
    };
    let eps = [frac(1, 10), frac(1, 4), frac(1, 2), frac(9, 10), int(1), frac(3, 2)][rng.gen_range(0..6)].clone();
    SolidNbhd::new(space, unit, eps).unwrap()
}

fn base_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(67);
    let (mut meet_samples, mut half_samples) = (0, 0);
    for p in 0..100 {
        let k = Space::numbered_grid("K", rng.gen_range(1..=3)).unwrap();
        let l = Space::numbered_grid("L", rng.gen_range(1..=3)).unwrap();
        let t = Space::tensor("T", &k, &l).unwrap();
        let w1 = TensorNbhd::new(&t, random_solid(&k, &mut rng), random_solid(&l, &mut rng)).unwrap();
        let w2 = TensorNbhd::new(&t, random_solid(&k, &mut rng), random_solid(&l, &mut rng)).unwrap();
        let w0 = topology::nbhd_meet(&w1, &w2).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let (z, wit) = topology::sample_sol_member(&w0, &mut rng).map_err(|e| e.to_string())?;
            let ok = w1.witness_validates(&z, &wit).unwrap() && w2.witness_validates(&z, &wit).unwrap();
            ensure(ok, || format!("meet member outside an input on pair {p}"))?;
            meet_samples += 1;
        }
        let h = topology::nbhd_half(&w1).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let (z1, a) = topology::sample_sol_member(&h, &mut rng).unwrap();
            let (z2, b) = topology::sample_sol_member(&h, &mut rng).unwrap();
            let s = topology::sum_witness(&a, &b).map_err(|e| e.to_string())?;
            ensure(w1.witness_validates(&z1.add(&z2).unwrap(), &s).unwrap(), || {
                format!("half sum escapes on pair {p}")
            })?;
            half_samples += 1;
        }
        for _ in 0..10 {
            let (z, wit) = topology::sample_sol_member(&w1, &mut rng).unwrap();
            let lambda = frac(rng.gen_range(-8..=8), 8);
            ensure(
                topology::scalar_absorb_check(&w1, &lambda, &z, &wit).map_err(|e| e.to_string())?,
                || format!("scalar {lambda} not absorbed on pair {p}"),
            )?;
        }
    }
    for i in 0..100 {
        let (n, m) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let k = Space::numbered_grid("K", n).unwrap();
        let l = Space::numbered_grid("L", m).unwrap();
        let t = Space::tensor("T", &k, &l).unwrap();
        let mut rows: Vec<Vec<Rational>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| frac(rng.gen_range(-4..=4), rng.gen_range(1..=3)))
                    .collect()
            })
            .collect();
        rows[rng.gen_range(0..n)][rng.gen_range(0..m)] = frac(rng.gen_range(1..=9), rng.gen_range(1..=4));
        let z = Element::from_matrix(&t, &rows).unwrap();
        let s = topology::hausdorff_separation(&z).map_err(|e| e.to_string())?;
        ensure(s.certificate.validates(&z, &s.u, &s.v).unwrap(), || {
            format!("unsound separation {i}")
        })?;
    }
    Ok(format!("100 pairs: {meet_samples} meet and {half_samples} half-sum members valid, 1000 scalars absorbed, 100 separations sound"))
}

// 7 ------------------------------------------------------------------------

fn refinement() -> Outcome {
    let mut total = 0;
    for (i, e) in [frac(1, 4), frac(1, 2), frac(9, 10)].into_iter().enumerate() {
        for (j, n) in [2usize, 3, 4].into_iter().enumerate() {
            let k = Space::numbered_grid("K", n).unwrap();
            let l = Space::numbered_grid("L", 5 - j).unwrap();
            let t = Space::tensor("T", &k, &l).unwrap();
            let u = SolidNbhd::new(&k, UnitSpec::ConstantOne, e.clone()).unwrap();
            let v = SolidNbhd::new(&l, UnitSpec::ConstantOne, e.clone()).unwrap();
            let w_un = SolidNbhd::new(&t, UnitSpec::default_for(&t), e.clone()).unwrap();
            let samples = if i == 2 && j == 2 { 1000 - total } else { 111 };
            let r = topology::un_refinement_check(&w_un, &u, &v, samples, (10 * i + j) as u64)
                .map_err(|x| x.to_string())?;
            ensure(r.status == Status::Pass && r.violations == 0, || {
                format!("eps {e}: {} violations", r.violations)
            })?;
            for s in &r.samples {
                ensure(s.product <= &e * &e && s.value.value <= s.product && s.in_w, || {
                    format!("eps {e}: sample {}", s.sample)
                })?;
            }
            total += r.samples.len();
        }
    }
    ensure(total == 1000, || format!("{total} samples"))?;
    Ok("1000 members in W_un, every product <= eps^2".into())
}

// 8 ------------------------------------------------------------------------

fn preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(89);
    let (h, tol) = (200u64, frac(1, 100));
    let (mut runs, mut taus) = (0, 0);
    for i in 0..50 {
        let (e, f) = if i % 2 == 0 {
            (
                Space::numbered_grid("K", rng.gen_range(1..=3)).unwrap(),
                Space::numbered_grid("L", rng.gen_range(1..=3)).unwrap(),
            )
        } else {
            let tags = [NormTag::L1, NormTag::L2, NormTag::Sup];
            (
                Space::seq("E", tags[rng.gen_range(0..3)]),
                Space::seq("F", tags[rng.gen_range(0..3)]),
            )
        };
        let t = Space::tensor("T", &e, &f).unwrap();
        let xs = cv::random_trace(&e, &cv::FAST_NULL_COEFS, &mut rng).unwrap();
        let ys = cv::random_trace(&f, &cv::FAST_NULL_COEFS, &mut rng).unwrap();
        let (ce, cf) = (
            CheckerConfig::new(&e, h, 10, tol.clone()),
            CheckerConfig::new(&f, h, 10, tol.clone()),
        );
        let ct = cv::tensor_config(&ce, &cf, h, 10, tol.clone());
        for kind in [Kind::Un, Kind::Uaw, Kind::Uo] {
            let r = cv::preservation_experiment(kind, &t, &xs, &ys, &ce, &cf, &ct, DoubleMode::Block)
                .map_err(|x| format!("pair {i} {kind}: {x}"))?;
            ensure(r.status() == Status::Pass, || format!("pair {i}: {kind} not preserved"))?;
            runs += 1;
        }
        if e.is_finite() {
            let u = random_solid(&e, &mut rng);
            let v = random_solid(&f, &mut rng);
            let w = TensorNbhd::new(&t, u, v).unwrap();
            let tv = topology::tau_null(&xs, &ys, &w, h).map_err(|x| x.to_string())?;
            let factors_in = tv.alpha0.is_some() && tv.beta0.is_some();
            ensure(
                !factors_in || (tv.status == Status::Pass && !tv.certified_corners.is_empty()),
                || format!("pair {i}: tau_null failed with both factors inside"),
            )?;
            taus += factors_in as usize;
        }
    }
    Ok(format!(
        "{runs} preservation runs pass; tau_null passes on all {taus} pairs with both factors inside"
    ))
}

// 9 ------------------------------------------------------------------------

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let r = frac(1, 20);
    let (mut members, mut certified, mut unresolved, mut agree) = (0, 0, 0, 0);
    for i in 0..200 {
        let inst = oracle::random_membership_instance(&mut rng).map_err(|e| e.to_string())?;
        let v =
            fremlin::sol_membership(&inst.z, &inst.u, &inst.v, &SearchOptions::default()).map_err(|e| e.to_string())?;
        let o = oracle::brute_force_dominator(&inst.z.abs(), &inst.u, &inst.v, &r).map_err(|e| e.to_string())?;
        if let Some(w) = &o.witness {
            ensure(w.validates(&inst.z, &inst.u, &inst.v).unwrap(), || {
                format!("instance {i}: invalid oracle witness")
            })?;
        }
        match v.status {
            Status::Pass => {
                let w = v.witness.as_ref().ok_or("member without witness")?;
                ensure(w.validates(&inst.z, &inst.u, &inst.v).unwrap(), || {
                    format!("instance {i}: invalid witness")
                })?;
                members += 1;
                if o.status == Status::Pass {
                    agree += 1;
                }
            }
            Status::Fail => {
                let c = v.certificate.as_ref().ok_or("non-member without certificate")?;
                ensure(
                    c.kind == CertificateKind::Dichotomy && c.validates(&inst.z, &inst.u, &inst.v).unwrap(),
                    || format!("instance {i}: unsound certificate"),
                )?;
                ensure(o.status == Status::Fail, || {
                    format!("instance {i}: certified non-member but the oracle found a witness")
                })?;
                certified += 1;
                agree += 1;
            }
            Status::Inconclusive => unresolved += 1,
        }
    }
    Ok(format!(
        "0 contradictions; {members} members, {certified} certified non-members, {unresolved} inconclusive; oracle agrees on {agree}"
    ))
}

// 10 -----------------------------------------------------------------------

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let mut names: Vec<PathBuf> = std::fs::read_dir(scenarios_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    let mut files = 0;
    for path in &names {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for out in [a.path(), b.path()] {
            let s = Scenario::load(path, &Overrides::default()).map_err(|e| e.to_string())?;
            run_scenario(&s, out).map_err(|e| e.to_string())?;
        }
        let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
        ensure(!ta.is_empty() && ta == tb, || {
            format!("{} differs between runs", path.display())
        })?;
        files += ta.len();
    }
    Ok(format!(
        "{} scenarios, {files} output files byte-identical",
        names.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("lattice/tensor algebra audits", algebra_audits),
        ("wedge equality falsified", wedge_equality),
        ("linf remark", remark_linf),
        ("uaw = pointwise, un = norm on grids", lemma1),
        ("uaw metric", metric),
        ("neighborhood base axioms", base_axioms),
        ("un refinement", refinement),
        ("preservation experiments", preservation),
        ("oracle equivalence", oracle_equivalence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
