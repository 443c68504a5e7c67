//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use mimo_mesh::dual::{
    compare_dpc_tdm, cutting_plane_solve, rates_achievable, subgradient_solve, CrpaSolution, CuttingPlaneParams,
    Scheme, SubgradientParams,
};
use mimo_mesh::hermitian::HermitianMatrix;
use mimo_mesh::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use mimo_mesh::mac::{
    cgp_solve, mac_gradient, mac_weighted_objective, polymatroid_check, project_onto_omega, recover_rates,
    waterfill_single_link, CgpParams, MacUser, NodeMac, WeightOrdering,
};
use mimo_mesh::hermitian::ComplexMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> std::result::Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || format!("took {elapsed:?}, limit {limit_s} s"))
}

fn weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.0..3.0)).collect()
}

fn gradient_matches_finite_differences() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let cases = 150;
    for _ in 0..cases {
        let k = rng.random_range(1..=4);
        let (n_t, n_r) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let node = random_node(&mut rng, k, n_t, n_r);
        let u = weights(&mut rng, k);
        let order = WeightOrdering::new(&u).unwrap();
        let q = random_covariances(&mut rng, k, n_r, node.p_max, 0.8);
        let dir: Vec<HermitianMatrix<f64>> = (0..k).map(|_| random_hermitian(&mut rng, n_r)).collect();
        // Keep Q ± hΔ positive definite.
        let floor = q.iter().map(|m| m.min_eigenvalue()).fold(f64::INFINITY, f64::min);
        let h = 1e-4 * floor.min(1.0);
        let shifted = |s: f64| -> Vec<HermitianMatrix<f64>> {
            q.iter().zip(&dir).map(|(m, d)| m.add_scaled(d, s)).collect()
        };
        let fd = (mac_weighted_objective(&node, &order, &shifted(h)).unwrap()
            - mac_weighted_objective(&node, &order, &shifted(-h)).unwrap())
            / (2.0 * h);
        let g = mac_gradient(&node, &order, &q).unwrap();
        let analytic: f64 = g.iter().zip(&dir).map(|(gi, di)| gi.inner(di)).sum::<f64>() / 2.0;
        let scale: f64 = g.iter().zip(&dir).map(|(gi, di)| gi.frobenius_norm() * di.frobenius_norm()).sum();
        let rel = (fd - analytic).abs() / analytic.abs().max(1e-3 * scale).max(1e-12);
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-4, || format!("worst relative error {worst:.2e}"))?;
    within(start.elapsed(), 30)?;
    Ok(format!("{cases} triples, worst relative error {worst:.1e}"))
}

fn projection_is_optimal() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut worst_vi, mut worst_psd, mut worst_tr) = (f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    let cases = 250;
    for _ in 0..cases {
        let k = rng.random_range(1..=4);
        let n = rng.random_range(1..=3);
        let p = rng.random_range(0.1..10.0);
        let d: Vec<HermitianMatrix<f64>> =
            (0..k).map(|_| random_hermitian(&mut rng, n).scale(rng.random_range(0.1..6.0))).collect();
        let proj = project_onto_omega(&d, p).blocks;
        for b in &proj {
            worst_psd = worst_psd.min(b.min_eigenvalue());
        }
        worst_tr = worst_tr.max(proj.iter().map(|b| b.trace()).sum::<f64>() - p);
        for _ in 0..100 {
            let fill = rng.random_range(0.0..=1.0);
            let x = random_covariances(&mut rng, k, n, p, fill);
            let vi: f64 =
                d.iter().zip(&proj).zip(&x).map(|((di, pi), xi)| di.sub(pi).inner(&xi.sub(pi))).sum();
            worst_vi = worst_vi.max(vi);
        }
    }
    ensure(worst_psd >= -1e-9, || format!("min eigenvalue {worst_psd:.2e}"))?;
    ensure(worst_tr <= 1e-9, || format!("trace exceeds budget by {worst_tr:.2e}"))?;
    ensure(worst_vi <= 1e-7, || format!("variational inequality violated by {worst_vi:.2e}"))?;
    within(start.elapsed(), 30)?;
    Ok(format!("{cases} instances, max ⟨D − D̃, X − D̃⟩ = {worst_vi:.1e}"))
}

fn scalar_mac(gains: &[f64], p: f64) -> NodeMac<f64> {
    let users = gains
        .iter()
        .enumerate()
        .map(|(i, &g)| MacUser { link: i, h: ComplexMatrix::from_real(1, 1, &[1.0]).unwrap(), rho: g })
        .collect();
    NodeMac::new(0, users, p).unwrap()
}

/// Weighted sum rate of a scalar two-user MAC by direct formula on a 0.01 grid.
/// Both rates grow with either power, so only splits of the full budget are
/// searched; the grid includes both endpoints.
fn grid_oracle(g: [f64; 2], u: [f64; 2], p: f64) -> f64 {
    // Decode the heavier user last; it sees no interference.
    let (lo, hi) = if u[0] <= u[1] { (0, 1) } else { (1, 0) };
    let steps = (p / 0.01).floor() as usize;
    let splits = (0..=steps).map(|i| i as f64 * 0.01).chain(std::iter::once(p));
    let mut best = f64::NEG_INFINITY;
    for q0 in splits {
        let q = [q0, p - q0];
        let r_hi = (1.0 + g[hi] * q[hi]).log2();
        let r_lo = (1.0 + g[0] * q[0] + g[1] * q[1]).log2() - r_hi;
        best = best.max(u[lo] * r_lo + u[hi] * r_hi);
    }
    best
}

fn link_subproblem_is_optimal() -> Check {
    let start = Instant::now();
    let params = CgpParams { eps_stop: 1e-10, max_iters: 2000, ..CgpParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst_wf: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=3);
        let node = random_node(&mut rng, 1, n, n);
        let a = cgp_solve(&node, &[1.0], &params).unwrap();
        let usr = &node.users[0];
        let wf = waterfill_single_link(&usr.h, usr.rho, node.p_max).unwrap();
        worst_wf = worst_wf.max((a.rates[0] - wf.capacity).abs());
    }
    ensure(worst_wf <= 1e-4, || format!("K = 1 differs from water-filling by {worst_wf:.2e}"))?;
    let mut instances = vec![([1.0, 1.0], [1.0, 2.0], 10.0)];
    for _ in 0..4 {
        let g = [rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)];
        let u = [rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)];
        instances.push((g, u, rng.random_range(1.0..10.0)));
    }
    let mut worst_grid: f64 = 0.0;
    for (g, u, p) in instances {
        let a = cgp_solve(&scalar_mac(&g, p), &u, &params).unwrap();
        let oracle = grid_oracle(g, u, p);
        // The grid can only undershoot; a small excess is the grid's resolution.
        worst_grid = worst_grid.max((a.objective - oracle).abs());
    }
    ensure(worst_grid <= 1e-3, || format!("scalar MAC differs from grid search by {worst_grid:.2e}"))?;
    within(start.elapsed(), 60)?;
    Ok(format!("water-filling error {worst_wf:.1e}, grid error {worst_grid:.1e}"))
}

fn rates_match_objective() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut worst, mut failures) = (0.0f64, 0);
    let cases = 300;
    for _ in 0..cases {
        let k = rng.random_range(1..=4);
        let (n_t, n_r) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let node = random_node(&mut rng, k, n_t, n_r);
        let u = weights(&mut rng, k);
        let order = WeightOrdering::new(&u).unwrap();
        let fill = rng.random_range(0.0..=1.0);
        let q = random_covariances(&mut rng, k, n_r, node.p_max, fill);
        let rates = recover_rates(&node, &order, &q).unwrap();
        let weighted: f64 = u.iter().zip(&rates).map(|(w, r)| w * r).sum();
        let f = mac_weighted_objective(&node, &order, &q).unwrap();
        worst = worst.max((weighted - f).abs());
        if !polymatroid_check(&node, &q, &rates, 1e-9).unwrap() {
            failures += 1;
        }
    }
    ensure(worst <= 1e-8, || format!("Σ u R differs from F by {worst:.2e}"))?;
    ensure(failures == 0, || format!("{failures} rate vectors outside the polymatroid"))?;
    Ok(format!("{cases} instances, max |Σ u R − F| = {worst:.1e}"))
}

fn objective_is_concave() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let k = rng.random_range(1..=4);
        let (n_t, n_r) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let node = random_node(&mut rng, k, n_t, n_r);
        let order = WeightOrdering::new(&weights(&mut rng, k)).unwrap();
        let (fa, fb) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let a = random_covariances(&mut rng, k, n_r, node.p_max, fa);
        let b = random_covariances(&mut rng, k, n_r, node.p_max, fb);
        let mid: Vec<_> = a.iter().zip(&b).map(|(x, y)| x.add(y).scale(0.5)).collect();
        let f = |q: &[HermitianMatrix<f64>]| mac_weighted_objective(&node, &order, q).unwrap();
        worst = worst.max(0.5 * (f(&a) + f(&b)) - f(&mid));
    }
    ensure(worst <= 1e-9, || format!("midpoint falls below the chord by {worst:.2e}"))?;
    Ok(format!("1000 midpoints, worst chord excess {worst:.1e}"))
}

fn duality_gap_closes(solutions: &mut Vec<(String, CrpaSolution)>) -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    for (seed, n, f) in DESK_SCENARIOS {
        let sc = desk_scenario(seed, n, f);
        let (cp, cp_trace) = cutting_plane_solve(&sc, Scheme::Dpc, &CuttingPlaneParams::default()).unwrap();
        let cuts = cp_trace.records.len();
        ensure(cp.converged && cp.relative_gap() <= 1e-3 && cuts <= 300, || {
            format!("seed {seed}: converged {} gap {:.2e} after {cuts} cuts", cp.converged, cp.relative_gap())
        })?;
        let (sg, sg_trace) = subgradient_solve(&sc, Scheme::Dpc, &SubgradientParams::default()).unwrap();
        let close = |x: f64| (x - cp.objective).abs() <= 0.01 * cp.objective.abs();
        let first = sg_trace.records.iter().find(|r| close(r.primal_obj) && close(r.dual_bound)).map(|r| r.k);
        ensure(close(sg.objective) && close(sg.dual_bound) && first.is_some(), || {
            format!(
                "seed {seed}: subgradient primal {:.4} dual {:.4} vs cutting plane {:.4}",
                sg.objective, sg.dual_bound, cp.objective
            )
        })?;
        lines.push(format!("seed {seed}: {cuts} cuts, subgradient within 1% at k = {}", first.unwrap()));
        solutions.push((format!("seed {seed} cutting plane"), cp));
        solutions.push((format!("seed {seed} subgradient"), sg));
    }
    within(start.elapsed(), 600)?;
    Ok(lines.join("; "))
}

fn single_link_micro_oracle() -> Check {
    let sc = single_link_scenario(21);
    let c = link_capacity_2x2(&sc.channels[0], sc.p_max[0]);
    // Θ is flat to second order around 1/C, so a price within 1e-3 needs a
    // gap well below that.
    let cp_params = CuttingPlaneParams { tol_rel: 1e-7, ..Default::default() };
    let (cp, _) = cutting_plane_solve(&sc, Scheme::Dpc, &cp_params).unwrap();
    let sg_params = SubgradientParams { tol_rel: 1e-4, ..Default::default() };
    let (sg, _) = subgradient_solve(&sc, Scheme::Dpc, &sg_params).unwrap();
    for (name, sol) in [("cutting plane", &cp), ("subgradient", &sg)] {
        ensure((sol.objective - c.ln()).abs() <= 1e-3, || {
            format!("{name}: objective {:.6} vs ln C = {:.6}", sol.objective, c.ln())
        })?;
        ensure((sol.prices[0] - 1.0 / c).abs() <= 1e-3, || {
            format!("{name}: price {:.6} vs 1/C = {:.6}", sol.prices[0], 1.0 / c)
        })?;
    }
    Ok(format!("C = {c:.4} bits, ln C = {:.5}, cp {:.5}, sg {:.5}", c.ln(), cp.objective, sg.objective))
}

fn dpc_dominates_tdm(solutions: &mut Vec<(String, CrpaSolution)>) -> Check {
    let mut scenarios: Vec<(String, _)> =
        DESK_SCENARIOS.iter().map(|&(s, n, f)| (format!("seed {s}"), desk_scenario(s, n, f))).collect();
    scenarios.push(("hub".into(), hub_scenario(31)));
    let mut lines = Vec::new();
    for (name, sc) in &scenarios {
        let c = compare_dpc_tdm(sc, &CuttingPlaneParams::default()).unwrap();
        ensure(c.report.dominance_holds, || {
            format!("{name}: DPC {:.9} below TDM {:.9}", c.dpc.objective, c.tdm.objective)
        })?;
        // Prices on idle links are not unique, so a link counts as priced only
        // when it carries traffic at a positive price.
        let priced = |l: usize| c.dpc.prices[l] > 1e-6 && c.dpc.link_loads[l] > 1e-6;
        let shared = (0..sc.n_nodes()).any(|v| sc.topology.out_links(v).iter().filter(|&&l| priced(l)).count() >= 2);
        if shared {
            ensure(c.report.utility_gain > 0.0, || format!("{name}: no gain with a shared broadcast node"))?;
        }
        lines.push(format!("{name} gain {:.2}%{}", 100.0 * c.report.utility_gain, if shared { "" } else { " (no shared node)" }));
        if name == "hub" {
            ensure(shared && c.report.utility_gain > 0.0, || "hub scenario shows no gain".into())?;
        }
        solutions.push((format!("{name} dpc"), c.dpc));
        solutions.push((format!("{name} tdm"), c.tdm));
    }
    Ok(lines.join(", "))
}

fn recovered_solutions_are_feasible(solutions: &[(String, CrpaSolution)]) -> Check {
    let mut worst: f64 = 0.0;
    for (name, sol) in solutions {
        let sc = match name.split_whitespace().nth(1) {
            _ if name.starts_with("hub") => hub_scenario(31),
            Some(seed) => {
                let seed: u64 = seed.parse().unwrap();
                let &(s, n, f) = DESK_SCENARIOS.iter().find(|d| d.0 == seed).unwrap();
                desk_scenario(s, n, f)
            }
            None => unreachable!(),
        };
        let v = sol.max_violation(&sc).unwrap();
        worst = worst.max(v);
        ensure(v <= 1e-6, || format!("{name}: violation {v:.2e}"))?;
        ensure(rates_achievable(&sc, sol, 1e-6).unwrap(), || format!("{name}: rates outside the MAC region"))?;
        for q in sol.allocations.iter().flat_map(|na| na.allocation.q.iter()) {
            ensure(q.min_eigenvalue() >= -1e-9, || format!("{name}: covariance not PSD"))?;
        }
    }
    ensure(!solutions.is_empty(), || "no solutions to check".into())?;
    Ok(format!("{} solutions, worst violation {worst:.1e}", solutions.len()))
}

fn lp_matches_vertex_enumeration() -> Check {
    // The full randomized oracle lives in tests/lp_oracle.rs; this repeats a
    // compact version so the acceptance run is self-contained.
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut optimal = 0;
    for case in 0..500 {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(0..=6);
        let small = |rng: &mut ChaCha8Rng| rng.random_range(-4i32..=4) as f64 / 2.0;
        let mut lp = LinearProgram::new((0..n).map(|_| small(&mut rng)).collect());
        let mut anchor = Vec::new();
        for j in 0..n {
            let lo = rng.random_range(-3i32..=1) as f64;
            let hi = lo + rng.random_range(0i32..=4) as f64;
            lp.set_bounds(j, lo, hi);
            anchor.push(lo + rng.random_range(0.0..=1.0) * (hi - lo));
        }
        for _ in 0..m {
            let a: Vec<f64> = (0..n).map(|_| small(&mut rng)).collect();
            let at: f64 = a.iter().zip(&anchor).map(|(x, y)| x * y).sum();
            let (sense, rhs) = match rng.random_range(0..3) {
                0 => (Sense::Le, at + rng.random_range(0.0..1.0)),
                1 => (Sense::Ge, at - rng.random_range(0.0..1.0)),
                _ => (Sense::Eq, at),
            };
            lp.add_constraint(a, sense, rhs);
        }
        let s = solve_lp(&lp);
        ensure(s.status == LpStatus::Optimal, || format!("case {case}: {:?} on a feasible LP", s.status))?;
        let best = vertex_best(&lp);
        ensure((s.objective - best).abs() <= 1e-7 * (1.0 + best.abs()), || {
            format!("case {case}: simplex {} vs vertices {best}", s.objective)
        })?;
        let mut dual: f64 = lp.constraints.iter().zip(&s.duals).map(|(c, y)| c.rhs * y).sum();
        for (j, &d) in s.reduced_costs.iter().enumerate() {
            dual += if d > 0.0 { d * lp.lower[j] } else { d * lp.upper[j] };
        }
        ensure((dual - s.objective).abs() <= 1e-7 * (1.0 + s.objective.abs()), || {
            format!("case {case}: duality gap {:.2e}", dual - s.objective)
        })?;
        optimal += 1;
    }
    Ok(format!("{optimal} LPs agree with vertex enumeration and close the duality gap"))
}

fn vertex_best(lp: &LinearProgram<f64>) -> f64 {
    let n = lp.n_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let mut a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let mut b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss(&mut a, &mut b) {
            if lp.max_violation(&x) <= 1e-9 {
                best = best.min(lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum());
            }
        }
        // Next combination in lexicographic order.
        let mut i = n;
        while i > 0 && idx[i - 1] == planes.len() - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn gauss(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn main() {
    let mut solutions = Vec::new();
    let mut results: Vec<(&str, Check)> = Vec::new();
    results.push(("gradient matches finite differences", gradient_matches_finite_differences()));
    results.push(("projection onto the trace-capped PSD set", projection_is_optimal()));
    results.push(("link subproblem optimality", link_subproblem_is_optimal()));
    results.push(("successive-decoding rates reproduce the objective", rates_match_objective()));
    results.push(("weighted sum rate is concave", objective_is_concave()));
    results.push(("duality gap closes on desk scenarios", duality_gap_closes(&mut solutions)));
    results.push(("single-link analytic optimum", single_link_micro_oracle()));
    results.push(("DPC dominates TDM", dpc_dominates_tdm(&mut solutions)));
    results.push(("recovered solutions are primal feasible", recovered_solutions_are_feasible(&solutions)));
    results.push(("LP solver against vertex enumeration", lp_matches_vertex_enumeration()));
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
