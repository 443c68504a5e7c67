//! Per-node link-layer subproblem.
//!
//! A node's outgoing links form a Gaussian vector broadcast channel. Its
//! weighted sum-rate problem is solved on the dual multiple-access channel,
//! where user `i` transmits an `n_r × n_r` covariance `Q_i` through `H_i†`
//! and the receiver sees `I + Σ ρ_i H_i† Q_i H_i` (`n_t × n_t`). With the
//! users sorted by weight, the weighted sum rate becomes the concave
//! objective
//!
//! ```text
//! F(Q) = Σ_i Δ_i · log₂|I + Σ_{j≥i} ρ_π(j) H_π(j)† Q_π(j) H_π(j)|
//! ```
//!
//! with `Δ_i = u_π(i) − u_π(i−1)`, maximized over the set `Ω₊(P)` of PSD
//! covariances with total trace at most `P`. All rates are in bits.

use crate::error::{Error, Result};
use crate::hermitian::{ComplexMatrix, HermitianMatrix, PSD_REJECT};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MacUser<T> {
    /// Global link index this user stands for.
    pub link: usize,
    /// Broadcast-side gain, `n_r × n_t`.
    pub h: ComplexMatrix<T>,
    pub rho: T,
}

/// The dual MAC formed by one node's outgoing links.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMac<T> {
    pub node: usize,
    pub users: Vec<MacUser<T>>,
    pub p_max: T,
}

/// Users sorted by non-decreasing weight (ties by index) and the weight
/// increments along that order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightOrdering<T> {
    /// `pi[i]` is the user at position `i`.
    pub pi: Vec<usize>,
    /// `deltas[i] = u[pi[i]] − u[pi[i−1]]`, with `u[pi[−1]] = 0`.
    pub deltas: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkAllocation<T> {
    /// One `n_r × n_r` covariance per user.
    pub q: Vec<HermitianMatrix<T>>,
    /// Achieved rate per user (bits/s/Hz).
    pub rates: Vec<T>,
    /// `Σ u_i R_i`.
    pub objective: T,
    /// TDM only: fraction of the frame given to each link.
    pub time_shares: Option<Vec<T>>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted CGP step (starts with the initial point).
    pub trace: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgpParams<T> {
    /// Armijo sufficient-increase fraction, in (0, 1).
    pub sigma: T,
    /// Armijo backtracking factor, in (0, 1).
    pub beta: T,
    /// Scaling applied to the conjugate direction before projection.
    pub s_step: T,
    /// Stop once a projected gradient step would move no covariance entry
    /// by more than this.
    pub eps_stop: T,
    pub max_iters: usize,
    /// Fletcher–Reeves restart period; `None` means `4·K·n_r`.
    pub restart_period: Option<usize>,
    pub max_backtracks: usize,
}

impl<T: Real> Default for CgpParams<T> {
    fn default() -> Self {
        Self {
            sigma: T::lit(0.1),
            beta: T::lit(0.5),
            s_step: T::one(),
            eps_stop: T::lit(1e-6),
            max_iters: 500,
            restart_period: None,
            max_backtracks: 50,
        }
    }
}

impl<T: Real> CgpParams<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: T| x > T::zero() && x < T::one();
        if !unit(self.sigma) || !unit(self.beta) {
            return Err(Error::InvalidParameter("sigma and beta must lie in (0, 1)".into()));
        }
        if !(self.s_step > T::zero()) || !(self.eps_stop >= T::zero()) || self.max_iters == 0 {
            return Err(Error::InvalidParameter("invalid CGP step/stop settings".into()));
        }
        Ok(())
    }
}

impl<T: Real> NodeMac<T> {
    pub fn new(node: usize, users: Vec<MacUser<T>>, p_max: T) -> Result<Self> {
        let first = users
            .first()
            .ok_or_else(|| Error::InvalidParameter(format!("node {node} has no outgoing links")))?;
        let (nr, nt) = (first.h.rows(), first.h.cols());
        if users.iter().any(|u| u.h.rows() != nr || u.h.cols() != nt) {
            return Err(Error::Dimension(format!("node {node} has mixed channel dimensions")));
        }
        if !(p_max >= T::zero()) {
            return Err(Error::InvalidParameter(format!("node {node} has negative power budget")));
        }
        Ok(Self { node, users, p_max })
    }

    pub fn k(&self) -> usize {
        self.users.len()
    }

    pub fn n_t(&self) -> usize {
        self.users[0].h.cols()
    }

    pub fn n_r(&self) -> usize {
        self.users[0].h.rows()
    }

    /// `ρ_i H_i† Q_i H_i`.
    pub fn gram(&self, user: usize, q: &HermitianMatrix<T>) -> HermitianMatrix<T> {
        let u = &self.users[user];
        q.congruence(&u.h, u.rho)
    }

    fn check_covariances(&self, q: &[HermitianMatrix<T>]) -> Result<()> {
        if q.len() != self.k() {
            return Err(Error::Dimension(format!("{} covariances for {} users", q.len(), self.k())));
        }
        if let Some(bad) = q.iter().find(|m| m.dim() != self.n_r()) {
            return Err(Error::Dimension(format!(
                "covariance is {0}x{0}, expected {1}x{1}",
                bad.dim(),
                self.n_r()
            )));
        }
        Ok(())
    }

    fn check_psd(&self, q: &[HermitianMatrix<T>]) -> Result<()> {
        for m in q {
            let min = m.min_eigenvalue();
            if min < -T::tol(PSD_REJECT) * (T::one() + m.frobenius_norm()) {
                return Err(Error::NotPsd { min_eigenvalue: min.to_f64_lossy() });
            }
        }
        Ok(())
    }
}

impl<T: Real> WeightOrdering<T> {
    /// Stable sort by `(weight, index)`.
    pub fn new(u: &[T]) -> Result<Self> {
        if let Some(bad) = u.iter().find(|w| !(**w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("weights must be finite and >= 0, got {bad}")));
        }
        let mut pi: Vec<usize> = (0..u.len()).collect();
        pi.sort_by(|&a, &b| u[a].partial_cmp(&u[b]).unwrap().then(a.cmp(&b)));
        let mut prev = T::zero();
        let deltas = pi
            .iter()
            .map(|&i| {
                let d = u[i] - prev;
                prev = u[i];
                d
            })
            .collect();
        Ok(Self { pi, deltas })
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }
}

/// Running sums `S_i = I + Σ_{j≥i} ρ H† Q H` over ordering positions,
/// built from the last position backwards; `S_K = I`.
fn suffix_sums<T: Real>(
    node: &NodeMac<T>,
    order: &WeightOrdering<T>,
    q: &[HermitianMatrix<T>],
) -> Vec<HermitianMatrix<T>> {
    let k = order.len();
    let mut sums = vec![HermitianMatrix::identity(node.n_t()); k + 1];
    for i in (0..k).rev() {
        let user = order.pi[i];
        sums[i] = sums[i + 1].add(&node.gram(user, &q[user]));
    }
    sums
}

fn log2_det_i_plus_psd<T: Real>(s: &HermitianMatrix<T>) -> T {
    s.log2_det_hpd().unwrap_or_else(|| {
        // Only reachable when a covariance is slightly indefinite.
        s.eigenvalues().iter().map(|&l| l.max(T::min_positive_value()).log2()).sum()
    })
}

fn grams<T: Real>(node: &NodeMac<T>, q: &[HermitianMatrix<T>]) -> Vec<HermitianMatrix<T>> {
    q.iter().enumerate().map(|(i, qi)| node.gram(i, qi)).collect()
}

/// `F` from the per-user terms `ρ_i H_i† Q_i H_i`.
fn objective_of_grams<T: Real>(n_t: usize, order: &WeightOrdering<T>, grams: &[HermitianMatrix<T>]) -> T {
    let mut sum = HermitianMatrix::identity(n_t);
    let mut f = T::zero();
    for i in (0..order.len()).rev() {
        sum = sum.add(&grams[order.pi[i]]);
        if order.deltas[i] != T::zero() {
            f = f + order.deltas[i] * log2_det_i_plus_psd(&sum);
        }
    }
    f
}

fn objective_unchecked<T: Real>(
    node: &NodeMac<T>,
    order: &WeightOrdering<T>,
    q: &[HermitianMatrix<T>],
) -> T {
    objective_of_grams(node.n_t(), order, &grams(node, q))
}

/// Weighted sum-rate objective `F(Q)` of the dual MAC.
pub fn mac_weighted_objective<T: Real>(
    node: &NodeMac<T>,
    order: &WeightOrdering<T>,
    q: &[HermitianMatrix<T>],
) -> Result<T> {
    node.check_covariances(q)?;
    node.check_psd(q)?;
    Ok(objective_unchecked(node, order, q))
}

fn gradient_unchecked<T: Real>(
    node: &NodeMac<T>,
    order: &WeightOrdering<T>,
    q: &[HermitianMatrix<T>],
) -> Vec<HermitianMatrix<T>> {
    let k = order.len();
    let n_t = node.n_t();
    let sums = suffix_sums(node, order, q);
    let scale = T::lit(2.0) / T::LN_2();
    let mut grads = vec![HermitianMatrix::zeros(node.n_r()); k];
    let mut acc = HermitianMatrix::zeros(n_t);
    for j in 0..k {
        let d = order.deltas[j];
        if d != T::zero() {
            let inv = sums[j].inverse_hpd().unwrap_or_else(|| {
                sums[j].eigh().reconstruct_with(|l| T::one() / l.max(T::epsilon()))
            });
            acc.add_scaled_assign(&inv, d);
        }
        let user = order.pi[j];
        let u = &node.users[user];
        grads[user] = acc.congruence_adjoint(&u.h, scale * u.rho);
    }
    grads
}

/// Gradient of `F` with respect to each user's covariance, using the
/// complex-gradient convention `∇_z f = 2 (∂f/∂z)*`; the directional
/// derivative along a Hermitian `ΔQ` is therefore `⟨Ḡ, ΔQ⟩ / 2`.
pub fn mac_gradient<T: Real>(
    node: &NodeMac<T>,
    order: &WeightOrdering<T>,
    q: &[HermitianMatrix<T>],
) -> Result<Vec<HermitianMatrix<T>>> {
    node.check_covariances(q)?;
    node.check_psd(q)?;
    Ok(gradient_unchecked(node, order, q))
}

/// Successive-decoding rates for the given ordering: the last user in the
/// ordering sees no interference, each earlier user sees the users after it.
pub fn recover_rates<T: Real>(
    node: &NodeMac<T>,
    order: &WeightOrdering<T>,
    q: &[HermitianMatrix<T>],
) -> Result<Vec<T>> {
    node.check_covariances(q)?;
    Ok(rates_unchecked(node, order, q))
}

fn rates_unchecked<T: Real>(
    node: &NodeMac<T>,
    order: &WeightOrdering<T>,
    q: &[HermitianMatrix<T>],
) -> Vec<T> {
    let sums = suffix_sums(node, order, q);
    let logdets: Vec<T> = sums.iter().map(log2_det_i_plus_psd).collect();
    let mut rates = vec![T::zero(); order.len()];
    for (i, &user) in order.pi.iter().enumerate() {
        rates[user] = logdets[i] - logdets[i + 1];
    }
    rates
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaProjection<T> {
    pub blocks: Vec<HermitianMatrix<T>>,
    /// Optimal multiplier of the trace constraint.
    pub mu: T,
}

/// Frobenius-nearest point of `Ω₊(P)` to a list of Hermitian blocks.
///
/// The stacked block-diagonal matrix `D` is eigendecomposed block by block
/// (its spectrum is the union of the blocks' spectra), the shift `μ*` is
/// found by [`trace_capped_shift`], and each block is rebuilt as
/// `U (Λ − μ* I)₊ U†`.
pub fn project_onto_omega<T: Real>(q: &[HermitianMatrix<T>], p_max: T) -> OmegaProjection<T> {
    let eigs: Vec<_> = q.iter().map(|b| b.eigh()).collect();
    let mut all: Vec<T> = eigs.iter().flat_map(|e| e.eigenvalues.iter().copied()).collect();
    all.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mu = trace_capped_shift(&all, p_max);
    let blocks = eigs.iter().map(|e| e.reconstruct_with(|l| (l - mu).max(T::zero()))).collect();
    OmegaProjection { blocks, mu }
}

/// Maximizer `μ* ≥ 0` of the dual function
/// `ψ(μ) = −½ Σ_j max(0, λ_j − μ)² − μ P` for eigenvalues sorted
/// non-increasing.
///
/// `ψ` is concave and quadratic between consecutive eigenvalues, so the
/// pieces `[λ_{I+1}, λ_I] ∩ R₊` are walked from the top: on piece `I` the
/// stationary point is `(Σ_{i≤I} λ_i − P)/I`; if it falls outside the piece
/// the maximum over the piece sits at an endpoint, and the walk stops as soon
/// as moving to the lower endpoint stops improving `ψ`.
pub fn trace_capped_shift<T: Real>(sorted_desc: &[T], p_max: T) -> T {
    let zero = T::zero();
    let n = sorted_desc.len();
    let lambda = |i: usize| -> T {
        // 1-based with sentinels λ_0 = +∞, λ_{n+1} = −∞.
        if i == 0 {
            T::infinity()
        } else if i > n {
            T::neg_infinity()
        } else {
            sorted_desc[i - 1]
        }
    };
    let psi = |mu: T| -> T {
        let s: T = sorted_desc.iter().map(|&l| (l - mu).max(zero).powi(2)).sum();
        -T::lit(0.5) * s - mu * p_max
    };

    // Piece 0 is [λ_1, ∞): ψ is non-increasing there, so start at its left end.
    if n == 0 || lambda(1) <= zero {
        return zero;
    }
    let mut mu_best = lambda(1);
    let mut phi_best = psi(mu_best);
    let mut partial = zero;
    for piece in 1..=n {
        partial += lambda(piece);
        let lo = lambda(piece + 1).max(zero);
        let hi = lambda(piece);
        let candidate = (partial - p_max) / T::lit(piece as f64);
        if candidate >= lo && candidate <= hi {
            return candidate;
        }
        let phi_lo = psi(lo);
        if phi_lo < phi_best {
            break;
        }
        mu_best = lo;
        phi_best = phi_lo;
        if lo == zero {
            break;
        }
    }
    mu_best
}

/// Armijo sufficient-increase test
/// `F_new − F_old ≥ σ βᵐ Σ_i Re Tr(G_i† (Q̄_i − Q_i))`.
pub fn armijo_accept<T: Real>(
    f_old: T,
    f_new: T,
    direction: &[HermitianMatrix<T>],
    step: &[HermitianMatrix<T>],
    sigma: T,
    beta: T,
    m: u32,
) -> bool {
    let inner: T = direction.iter().zip(step).map(|(g, d)| g.inner(d)).sum();
    f_new - f_old >= sigma * beta.powi(m as i32) * inner
}

fn inner_list<T: Real>(a: &[HermitianMatrix<T>], b: &[HermitianMatrix<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

fn norm2_list<T: Real>(a: &[HermitianMatrix<T>]) -> T {
    a.iter().map(|x| x.inner(x)).sum()
}

fn zero_allocation<T: Real>(node: &NodeMac<T>) -> LinkAllocation<T> {
    LinkAllocation {
        q: vec![HermitianMatrix::zeros(node.n_r()); node.k()],
        rates: vec![T::zero(); node.k()],
        objective: T::zero(),
        time_shares: None,
        iterations: 0,
        converged: true,
        trace: vec![T::zero()],
    }
}

/// Conjugate gradient projection for the weighted sum-rate problem, starting
/// from equal power on every positively weighted user.
pub fn cgp_solve<T: Real>(node: &NodeMac<T>, u: &[T], params: &CgpParams<T>) -> Result<LinkAllocation<T>> {
    cgp_solve_from(node, u, params, None)
}

/// [`cgp_solve`] with an optional feasible starting point.
///
/// Users with zero weight are pinned to `Q = 0`: they contribute nothing to
/// the objective and any power they hold is wasted budget.
pub fn cgp_solve_from<T: Real>(
    node: &NodeMac<T>,
    u: &[T],
    params: &CgpParams<T>,
    init: Option<&[HermitianMatrix<T>]>,
) -> Result<LinkAllocation<T>> {
    params.validate()?;
    if u.len() != node.k() {
        return Err(Error::Dimension(format!("{} weights for {} users", u.len(), node.k())));
    }
    let order = WeightOrdering::new(u)?;
    let u_top = u.iter().fold(T::zero(), |m, &x| m.max(x));
    let active: Vec<bool> = u.iter().map(|&w| w > T::zero()).collect();
    let n_active = active.iter().filter(|&&a| a).count();
    if n_active == 0 || node.p_max == T::zero() {
        return Ok(zero_allocation(node));
    }

    // Maximizers are invariant to scaling the weights; unit top weight keeps
    // gradient steps on the scale of the power budget.
    let unit_u: Vec<T> = u.iter().map(|&w| w / u_top).collect();
    let unit_order = WeightOrdering::new(&unit_u)?;

    let n_r = node.n_r();
    let mut q: Vec<HermitianMatrix<T>> = match init {
        Some(start) => {
            node.check_covariances(start)?;
            start
                .iter()
                .zip(&active)
                .map(|(m, &a)| if a { m.clone() } else { HermitianMatrix::zeros(n_r) })
                .collect()
        }
        None => {
            let each = node.p_max / T::lit((n_active * n_r) as f64);
            active
                .iter()
                .map(|&a| {
                    if a {
                        HermitianMatrix::scaled_identity(n_r, each)
                    } else {
                        HermitianMatrix::zeros(n_r)
                    }
                })
                .collect()
        }
    };

    let restart_period = params.restart_period.unwrap_or(4 * node.k() * n_r).max(1);
    let mut f = objective_unchecked(node, &unit_order, &q);
    let mut trace = vec![f * u_top];
    let mut prev: Option<(Vec<HermitianMatrix<T>>, T)> = None;
    let mut converged = false;
    let mut iterations = 0;

    'outer: for iter in 0..params.max_iters {
        iterations = iter + 1;
        let grad = gradient_unchecked(node, &unit_order, &q);
        let gn2 = norm2_list(&grad);
        if gn2 == T::zero() {
            converged = true;
            break;
        }
        // Stationarity is judged on the steepest-ascent step: a conjugate
        // direction can stall while the projected gradient still moves.
        let shifted: Vec<_> = grad.iter().zip(&q).map(|(g, qi)| qi.add_scaled(g, params.s_step)).collect();
        let gradient_step: Vec<_> =
            project_onto_omega(&shifted, node.p_max).blocks.iter().zip(&q).map(|(b, qi)| b.sub(qi)).collect();
        let gradient_move = gradient_step.iter().fold(T::zero(), |m, d| m.max(d.max_abs_entry()));
        if gradient_move < params.eps_stop {
            converged = true;
            break;
        }
        let mut conjugate = prev.is_some() && iter % restart_period != 0;
        let (dir, q_next, f_next) = loop {
            let (dir, step) = match (&prev, conjugate) {
                (Some((pdir, pgn2)), true) => {
                    let kappa = gn2 / *pgn2;
                    let dir: Vec<_> = grad.iter().zip(pdir).map(|(g, d)| g.add_scaled(d, kappa)).collect();
                    let shifted: Vec<_> =
                        q.iter().zip(&dir).map(|(qi, di)| qi.add_scaled(di, params.s_step)).collect();
                    let q_bar = project_onto_omega(&shifted, node.p_max).blocks;
                    let step: Vec<_> = q_bar.iter().zip(&q).map(|(b, qi)| b.sub(qi)).collect();
                    (dir, step)
                }
                _ => (grad.clone(), gradient_step.clone()),
            };
            let inner = inner_list(&dir, &step);
            let resolution = T::epsilon() * T::lit(16.0) * (T::one() + f.abs());
            if inner <= resolution {
                if conjugate {
                    conjugate = false;
                    continue;
                }
                converged = true;
                break 'outer;
            }
            // The Gram terms are linear in Q, so trial points only need sums.
            let base = grams(node, &q);
            let delta = grams(node, &step);
            let mut accepted = None;
            for m in 0..params.max_backtracks {
                let t = params.beta.powi(m as i32);
                let trial: Vec<_> = base.iter().zip(&delta).map(|(g, d)| g.add_scaled(d, t)).collect();
                let fc = objective_of_grams(node.n_t(), &unit_order, &trial);
                if fc - f >= params.sigma * t * inner {
                    accepted = Some((t, fc));
                    break;
                }
            }
            match accepted {
                Some((t, fc)) => {
                    let cand: Vec<_> = q.iter().zip(&step).map(|(qi, d)| qi.add_scaled(d, t)).collect();
                    break (dir, cand, fc);
                }
                None if conjugate => conjugate = false,
                None => {
                    // No representable improving step along the projected gradient.
                    converged = true;
                    break 'outer;
                }
            }
        };
        let change = q_next
            .iter()
            .zip(&q)
            .fold(T::zero(), |m, (a, b)| m.max(a.sub(b).max_abs_entry()));
        q = q_next;
        f = f_next;
        trace.push(f * u_top);
        // A stalled step restarts from the gradient.
        prev = if change < params.eps_stop { None } else { Some((dir, gn2)) };
    }

    let rates = rates_unchecked(node, &order, &q);
    let objective = u.iter().zip(&rates).map(|(&w, &r)| w * r).sum();
    Ok(LinkAllocation { q, rates, objective, time_shares: None, iterations, converged, trace })
}

/// True when every subset-sum of `rates` is within the MAC polymatroid bound
/// `Σ_{i∈S} R_i ≤ log₂|I + Σ_{i∈S} ρ_i H_i† Q_i H_i| + tol`.
pub fn polymatroid_check<T: Real>(
    node: &NodeMac<T>,
    q: &[HermitianMatrix<T>],
    rates: &[T],
    tol: T,
) -> Result<bool> {
    let k = node.k();
    if k > 10 {
        return Err(Error::TooManyLinks(k));
    }
    node.check_covariances(q)?;
    if rates.len() != k {
        return Err(Error::Dimension(format!("{} rates for {k} users", rates.len())));
    }
    let grams: Vec<_> = (0..k).map(|i| node.gram(i, &q[i])).collect();
    for mask in 1u32..(1 << k) {
        let mut sum = HermitianMatrix::identity(node.n_t());
        let mut rate_sum = T::zero();
        for i in 0..k {
            if mask & (1 << i) != 0 {
                sum = sum.add(&grams[i]);
                rate_sum += rates[i];
            }
        }
        if rate_sum > log2_det_i_plus_psd(&sum) + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waterfill<T> {
    /// Optimal `n_r × n_r` covariance on the dual (MAC) side.
    pub q: HermitianMatrix<T>,
    pub capacity: T,
    /// Water level `μ`; zero when the channel is null.
    pub level: T,
    /// Mode gains `g_i` (eigenvalues of `ρ H H†`, non-increasing).
    pub gains: Vec<T>,
    pub powers: Vec<T>,
}

/// Single-user capacity by water-filling the power over the channel's
/// eigenmodes. The covariance is expressed on the receive side (`n_r × n_r`)
/// so it can be compared with MAC covariances directly; the mode gains and
/// the capacity are the same on either side.
pub fn waterfill_single_link<T: Real>(h: &ComplexMatrix<T>, rho: T, p_max: T) -> Result<Waterfill<T>> {
    if !(p_max > T::zero()) {
        return Err(Error::InvalidParameter("water-filling needs a positive power budget".into()));
    }
    let n_r = h.rows();
    let gram = HermitianMatrix::identity(h.cols()).congruence_adjoint(h, rho);
    let eig = gram.eigh();
    let floor = T::tol(1e-12) * (T::one() + gram.frobenius_norm());
    let gains: Vec<T> = eig.eigenvalues.iter().map(|&g| if g > floor { g } else { T::zero() }).collect();
    if gains.iter().all(|&g| g == T::zero()) {
        return Ok(Waterfill {
            q: HermitianMatrix::zeros(n_r),
            capacity: T::zero(),
            level: T::zero(),
            gains,
            powers: vec![T::zero(); n_r],
        });
    }
    let used = |mu: T| -> T {
        gains.iter().filter(|&&g| g > T::zero()).map(|&g| (mu - T::one() / g).max(T::zero())).sum()
    };
    let weakest = gains.iter().filter(|&&g| g > T::zero()).fold(T::infinity(), |m, &g| m.min(g));
    let (mut lo, mut hi) = (T::zero(), p_max + T::one() / weakest);
    let tol = T::tol(1e-10);
    while hi - lo > tol * (T::one() + hi) {
        let mid = (lo + hi) * T::lit(0.5);
        if used(mid) > p_max {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let level = (lo + hi) * T::lit(0.5);
    let mut powers: Vec<T> =
        gains.iter().map(|&g| if g > T::zero() { (level - T::one() / g).max(T::zero()) } else { T::zero() }).collect();
    let total: T = powers.iter().copied().sum();
    if total > T::zero() {
        powers.iter_mut().for_each(|p| *p = *p * p_max / total);
    }
    let q = eig.reconstruct_with({
        let mut it = powers.iter();
        move |_| *it.next().unwrap()
    });
    let capacity = gains.iter().zip(&powers).map(|(&g, &p)| (T::one() + g * p).log2()).sum();
    Ok(Waterfill { q, capacity, level, gains, powers })
}

/// Time-division baseline: the node splits a unit frame among its links and
/// each link transmits alone at full power during its share, so
/// `R_l = τ_l C_l`. The weighted sum is linear in `τ`, so all time goes to the
/// links maximizing `u_l C_l`, split evenly on ties.
pub fn tdm_link_subproblem<T: Real>(node: &NodeMac<T>, u: &[T]) -> Result<LinkAllocation<T>> {
    if u.len() != node.k() {
        return Err(Error::Dimension(format!("{} weights for {} users", u.len(), node.k())));
    }
    WeightOrdering::new(u)?;
    let fills: Vec<Waterfill<T>> = node
        .users
        .iter()
        .map(|usr| {
            if node.p_max > T::zero() {
                waterfill_single_link(&usr.h, usr.rho, node.p_max)
            } else {
                Ok(Waterfill {
                    q: HermitianMatrix::zeros(node.n_r()),
                    capacity: T::zero(),
                    level: T::zero(),
                    gains: vec![],
                    powers: vec![],
                })
            }
        })
        .collect::<Result<_>>()?;
    let scores: Vec<T> = u.iter().zip(&fills).map(|(&w, wf)| w * wf.capacity).collect();
    let best = scores.iter().fold(T::neg_infinity(), |m, &s| m.max(s));
    let tie = T::tol(1e-12) * (T::one() + best.abs());
    let winners: Vec<bool> = scores.iter().map(|&s| s >= best - tie).collect();
    let share = T::one() / T::lit(winners.iter().filter(|&&w| w).count() as f64);
    let tau: Vec<T> = winners.iter().map(|&w| if w { share } else { T::zero() }).collect();
    let rates: Vec<T> = tau.iter().zip(&fills).map(|(&t, wf)| t * wf.capacity).collect();
    let q = fills
        .into_iter()
        .zip(&tau)
        .map(|(wf, &t)| if t > T::zero() { wf.q } else { HermitianMatrix::zeros(node.n_r()) })
        .collect();
    let objective = u.iter().zip(&rates).map(|(&w, &r)| w * r).sum();
    Ok(LinkAllocation {
        q,
        rates,
        objective,
        time_shares: Some(tau),
        iterations: 1,
        converged: true,
        trace: vec![objective],
    })
}
