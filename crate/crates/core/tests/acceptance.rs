//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::Instant;

use covergen::exactsym::{exponent_identity_check, rat};
use covergen::iwasawa::iwasawa;
use covergen::matgroups::{build_subgroup, weyl_long, Matrix, SubgroupKind};
use covergen::padic::{character_phase, stratum_reps, LocalElement, LocalFieldConfig};
use covergen::verify::{default_grid, run_scenario, GridEntry, VerificationReport, Verdict};
use covergen::BigRat;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn line(c: u8, title: &str, secs: f64, o: &Outcome) {
    println!("criterion {c} {:<28} {} ({:.1}s) {}", title, if o.ok { "PASS" } else { "FAIL" }, secs, o.detail);
}

fn run_entries(entries: &[&GridEntry]) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    for e in entries {
        match run_scenario(&e.scenario) {
            Ok(reps) => out.extend(reps),
            Err(err) => println!("    {} error: {err}", e.scenario.name),
        }
    }
    for r in &out {
        let se = r.stderr.map(|s| format!(" se={s:.2e}")).unwrap_or_default();
        let tail = r.tail_bound.map(|t| format!(" tail={t:.2e}")).unwrap_or_default();
        println!("    {:<44} {:<12} rel={:.3e}{se}{tail} cosets={}", r.scenario, r.verdict.to_string(), r.rel_err, r.coset_count);
    }
    out
}

fn grid_criterion(grid: &[GridEntry], c: u8, limit_secs: f64, want: Verdict) -> (Outcome, f64) {
    let start = Instant::now();
    let entries: Vec<&GridEntry> = grid.iter().filter(|e| e.criterion == c).collect();
    let expected: usize = entries.len();
    let reps = run_entries(&entries);
    let secs = start.elapsed().as_secs_f64();
    let bad: Vec<&str> = reps.iter().filter(|r| r.verdict != want).map(|r| r.scenario.as_str()).collect();
    let complete = reps.len() >= expected;
    let ok = complete && bad.is_empty() && secs <= limit_secs;
    let detail = if ok {
        format!("{} reports", reps.len())
    } else if !complete {
        "scenario errors".to_string()
    } else if !bad.is_empty() {
        format!("not {want}: {}", bad.join(", "))
    } else {
        format!("over the {limit_secs}s limit")
    };
    (Outcome { ok, detail }, secs)
}

fn exponent_collapse() -> Outcome {
    let mut bad = Vec::new();
    for n in 2..=5 {
        for r in 1..=5 {
            if exponent_identity_check(n, r) != Ok(true) {
                bad.push(format!("({n},{r})"));
            }
        }
    }
    Outcome { ok: bad.is_empty(), detail: if bad.is_empty() { "20 pairs exact".into() } else { bad.join(" ") } }
}

fn random_rat(rng: &mut ChaCha8Rng) -> BigRat {
    rat(rng.gen_range(-60..=60), rng.gen_range(1..=24))
}

fn structural() -> Outcome {
    let mut notes = Vec::new();
    for (n, r) in [(2, 1), (2, 2), (3, 1), (3, 2)] {
        let w: Matrix<BigRat> = weyl_long(n, r).unwrap();
        let wi = w.inverse().unwrap();
        let u = build_subgroup(SubgroupKind::U0, n, r, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64 * 10 + r as u64);
        for _ in 0..20 {
            let vals: Vec<BigRat> = (0..u.free_count()).map(|_| random_rat(&mut rng)).collect();
            let x = u.instantiate(&vals).unwrap();
            if !w.mul_ref(&x).mul_ref(&wi).is_lower_unipotent() {
                notes.push(format!("w U0 w^-1 not lower at ({n},{r})"));
                break;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut done = 0;
    while done < 1000 {
        let m = rng.gen_range(2..=5);
        let p = [2u64, 3, 5][done % 3];
        let rows: Vec<Vec<BigRat>> = (0..m).map(|_| (0..m).map(|_| random_rat(&mut rng)).collect()).collect();
        let g = Matrix::from_rows(rows).unwrap();
        if g.det().is_zero() {
            continue;
        }
        let d = iwasawa(&g, p).unwrap();
        let back = d.v.mul_ref(&Matrix::diag(&d.torus)).mul_ref(&d.k);
        if back != g || !d.v.is_upper_unipotent() || !d.k.is_in_maximal_compact(p) {
            notes.push(format!("iwasawa failed on matrix {done}"));
            break;
        }
        done += 1;
    }
    for p in [2u64, 3, 5] {
        let cfg = LocalFieldConfig::new(p).unwrap();
        for _ in 0..500 {
            let x = rat(rng.gen_range(-999..=999), rng.gen_range(1..=200));
            let y = rat(rng.gen_range(-999..=999), rng.gen_range(1..=200));
            let lhs = character_phase(&(&x + &y), p);
            let rhs = character_phase(&x, p) + character_phase(&y, p);
            let diff = &rhs - &lhs;
            if !diff.is_integer() {
                notes.push(format!("additivity failed at p={p}"));
                break;
            }
        }
        for k in 1..=3 {
            let s = stratum_reps(0, k, cfg, 1 << 20).unwrap();
            let w = s.weight.to_f64().unwrap();
            let acc: Complex64 = s.reps.iter().map(|a| LocalElement::new(a * cfg.power(-(k as i64)), cfg).additive_character::<f64>() * w).sum();
            if acc.norm() > 1e-12 {
                notes.push(format!("orthogonality {acc} at p={p}, k={k}"));
            }
        }
    }
    Outcome { ok: notes.is_empty(), detail: if notes.is_empty() { "conjugation, 1000 Iwasawa, characters".into() } else { notes.join("; ") } }
}

fn main() {
    let grid = default_grid();
    let mut failed = 0;
    let mut report = |c: u8, title: &str, secs: f64, o: Outcome| {
        line(c, title, secs, &o);
        if !o.ok {
            failed += 1;
        }
    };

    let start = Instant::now();
    let mut o = exponent_collapse();
    let secs = start.elapsed().as_secs_f64();
    if secs >= 1.0 {
        o.ok = false;
        o.detail.push_str("; over 1s");
    }
    report(1, "exponent collapse", secs, o);

    let (o, s) = grid_criterion(&grid, 2, 60.0, Verdict::Pass);
    report(2, "lemma and corollary", s, o);
    let (o, s) = grid_criterion(&grid, 3, 600.0, Verdict::Pass);
    report(3, "unramified computation", s, o);
    let (o, s) = grid_criterion(&grid, 4, 1800.0, Verdict::Pass);
    report(4, "theorem r<n", s, o);
    let (o, s) = grid_criterion(&grid, 5, 600.0, Verdict::Pass);
    report(5, "theorem r>=n", s, o);

    let start = Instant::now();
    let entries: Vec<&GridEntry> = grid.iter().filter(|e| e.criterion == 6).collect();
    let reps = run_entries(&entries);
    // chain ends against closed forms are the theorems themselves (criteria 3 to 5)
    let links: Vec<&VerificationReport> = reps.iter().filter(|r| !r.scenario.ends_with("=closed]")).collect();
    let bad: Vec<&str> = links.iter().filter(|r| r.verdict != Verdict::Pass).map(|r| r.scenario.as_str()).collect();
    let jac_ok = reps.iter().all(|r| r.jacobian.iter().all(|j| j.exact_match));
    let jac_count: usize = reps.iter().map(|r| r.jacobian.len()).sum();
    let ok = !links.is_empty() && bad.is_empty() && jac_ok;
    let detail = format!(
        "{} adjacent links, {jac_count} jacobians {}{}",
        links.len(),
        if jac_ok { "exact" } else { "MISMATCH" },
        if bad.is_empty() { String::new() } else { format!("; not pass: {}", bad.join(", ")) }
    );
    report(6, "checkpoint chain", start.elapsed().as_secs_f64(), Outcome { ok, detail });

    let (o, s) = grid_criterion(&grid, 7, 600.0, Verdict::Pass);
    report(7, "support", s, o);

    let start = Instant::now();
    let o = structural();
    report(8, "structural invariants", start.elapsed().as_secs_f64(), o);

    let (o, s) = grid_criterion(&grid, 9, 600.0, Verdict::Fail);
    report(9, "negative control", s, o);

    println!("{} of 9 criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
