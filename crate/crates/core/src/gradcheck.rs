//! Independent finite-difference verification of every analytic gradient.
//!
//! The checker only ever calls `Network::forward` and the loss, never the
//! backward pass it is judging, so agreement between the two is evidence
//! rather than a tautology.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::layers::{init_layer, LayerKind, ParamGroup, QInit};
use crate::network::{loss, Network, ParamPath};
use crate::scalar::{real, Scalar};
use crate::tensor::{Rng, Vector};

/// Central difference `(L(θ+h) - L(θ-h)) / 2h` of a scalar function of one
/// parameter coordinate.
pub fn central_difference<T: Scalar>(mut f: impl FnMut(T) -> T, theta: T, h: T) -> T {
    let two = T::one() + T::one();
    (f(theta + h) - f(theta - h)) / (two * h)
}

/// Worst-case errors for one parameter group of one layer.
#[derive(Clone, Debug)]
pub struct GroupStats<T> {
    pub layer: usize,
    pub group: String,
    pub max_rel_err: T,
    pub max_abs_err: T,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport<T> {
    pub groups: Vec<GroupStats<T>>,
    pub max_rel_err: T,
    pub max_abs_err: T,
    pub worst: Option<ParamPath>,
    pub coords_checked: usize,
    pub pass: bool,
}

/// Check every parameter of `net` at input `x`, target `y`.
///
/// A coordinate passes if `|analytic - numeric| <= atol` or if the relative
/// error `|a - n| / max(|a|, |n|, atol)` is within `rtol`; coordinates where
/// both gradients are below `atol` pass automatically.
pub fn check_network<T: Scalar>(
    net: &Network<T>,
    x: &Vector<T>,
    y: &Vector<T>,
    h: T,
    rtol: T,
    atol: T,
) -> Result<GradCheckReport<T>> {
    let (y_hat, caches) = net.forward(x)?;
    let delta = net.output_delta(&y_hat, y)?;
    let grads = net.backward(&caches, delta)?;
    let analytic = net.flatten_gradients(&grads)?;
    check_network_against(net, x, y, &analytic, h, rtol, atol)
}

/// Compare a precomputed flat gradient against central differences. Split
/// out so fault-injection checks can corrupt the analytic side first.
pub fn check_network_against<T: Scalar>(
    net: &Network<T>,
    x: &Vector<T>,
    y: &Vector<T>,
    analytic: &[T],
    h: T,
    rtol: T,
    atol: T,
) -> Result<GradCheckReport<T>> {
    let count = net.param_count();
    if analytic.len() != count {
        return Err(Error::shape(format!(
            "check_network: {} analytic gradients for {count} parameters",
            analytic.len()
        )));
    }
    let mut work = net.clone();
    let mut groups: Vec<GroupStats<T>> = Vec::new();
    let mut max_rel = T::zero();
    let mut max_abs = T::zero();
    let mut worst = None;
    let mut pass = true;
    for i in 0..count {
        let path = work.param_path(i);
        let orig = work.get_param(i);
        let mut eval = |theta: T| -> Result<T> {
            work.set_param(i, theta);
            let (y_hat, _) = work.forward(x)?;
            let l = loss(&y_hat, y)?;
            if !l.is_finite() {
                return Err(Error::non_finite(format!(
                    "loss at perturbed parameter {path} = {theta}"
                )));
            }
            Ok(l)
        };
        let lp = eval(orig + h)?;
        let lm = eval(orig - h)?;
        work.set_param(i, orig);
        let two = T::one() + T::one();
        let numeric = (lp - lm) / (two * h);
        let a = analytic[i];

        let abs_err = (a - numeric).abs();
        // Coordinates inside the absolute floor pass outright; their
        // relative error is reported as zero so it cannot dominate the
        // summary while the pass flag says otherwise.
        let within_floor = abs_err <= atol || (a.abs() < atol && numeric.abs() < atol);
        let rel_err = if within_floor {
            T::zero()
        } else {
            abs_err / a.abs().max(numeric.abs()).max(atol)
        };
        let ok = within_floor || rel_err <= rtol;
        if !ok {
            pass = false;
        }
        if worst.is_none() || rel_err > max_rel {
            worst = Some(path);
        }
        max_rel = max_rel.max(rel_err);
        max_abs = max_abs.max(abs_err);

        let group_name = match path.group {
            // all Q matrices of a layer are reported as one group
            ParamGroup::Q(_) => "Q".to_string(),
            other => other.to_string(),
        };
        match groups.iter_mut().find(|g| g.layer == path.layer && g.group == group_name) {
            Some(g) => {
                g.max_rel_err = g.max_rel_err.max(rel_err);
                g.max_abs_err = g.max_abs_err.max(abs_err);
            }
            None => groups.push(GroupStats {
                layer: path.layer,
                group: group_name,
                max_rel_err: rel_err,
                max_abs_err: abs_err,
            }),
        }
    }
    Ok(GradCheckReport {
        groups,
        max_rel_err: max_rel,
        max_abs_err: max_abs,
        worst,
        coords_checked: count,
        pass,
    })
}

/// Draw every free parameter of the network from `N(0, 1)`. Trained values
/// cluster near zero gradient coordinates; unit-scale parameters keep the
/// relative comparison meaningful.
pub fn gaussian_params<T: Scalar>(net: &mut Network<T>, rng: &mut Rng) {
    for i in 0..net.param_count() {
        net.set_param(i, rng.gaussian());
    }
}

/// The layer compositions exercised by the standard gradient-check suite:
/// affine→quadratic, affine→RPQ, quadratic→quadratic, RPQ→RPQ, and a
/// three-layer stack mixing all kinds. Widths stay small (≤ 6) and the
/// final activation is always sigmoid to match the output-delta rule.
pub fn standard_compositions<T: Scalar>() -> Vec<(&'static str, Network<T>)> {
    use ActivationKind::{Sigmoid, Tanh};
    use LayerKind::{Affine, Quadratic, Rpq};
    let builds: [(&'static str, Vec<(LayerKind, usize, usize, ActivationKind)>); 5] = [
        ("affine->quadratic", vec![(Affine, 4, 4, Sigmoid), (Quadratic, 4, 3, Sigmoid)]),
        ("affine->rpq", vec![(Affine, 4, 4, Sigmoid), (Rpq, 4, 3, Sigmoid)]),
        ("quadratic->quadratic", vec![(Quadratic, 3, 4, Tanh), (Quadratic, 4, 3, Sigmoid)]),
        ("rpq->rpq", vec![(Rpq, 3, 4, Tanh), (Rpq, 4, 3, Sigmoid)]),
        (
            "mixed-3-4-3-2",
            vec![(Affine, 3, 4, Sigmoid), (Quadratic, 4, 3, Tanh), (Rpq, 3, 2, Sigmoid)],
        ),
    ];
    let mut rng = Rng::new(0);
    builds
        .into_iter()
        .map(|(name, spec)| {
            let layers = spec
                .iter()
                .map(|&(kind, n_in, n_out, act)| {
                    init_layer(kind, n_in, n_out, act, &QInit::Zero, &mut rng)
                        .expect("static shapes")
                })
                .collect();
            (name, Network::new(spec[0].1, layers).expect("static shapes"))
        })
        .collect()
}

/// Random check point for a composition: `N(0,1)` parameters, inputs uniform
/// in `(-1, 1)`, and 0/1 multi-label targets.
///
/// Targets are random except where an output already saturates: once
/// `ŷ` leaves `(0.2, 0.8)`, a contradicting label makes the loss evaluate
/// `ln` of a catastrophically cancelled `1-ŷ`, and the *finite-difference
/// side* of the comparison (not the analytic gradient) loses more digits
/// than the tolerances allow. Those outputs get the label on their own
/// side, which keeps the oracle inside its validity envelope while the
/// delta `ŷ - y` stays nonzero for every output.
pub fn random_check_point<T: Scalar>(
    net: &mut Network<T>,
    seed: u64,
) -> (Vector<T>, Vector<T>) {
    let mut rng = Rng::new(seed);
    gaussian_params(net, &mut rng);
    let x = Vector::from_vec(
        (0..net.input_dim()).map(|_| rng.uniform(-T::one(), T::one())).collect(),
    );
    let (y_hat, _) = net.forward(&x).expect("shapes are consistent by construction");
    let lo = real::<T>(0.2);
    let hi = real::<T>(0.8);
    let y = Vector::from_vec(
        (0..net.output_dim())
            .map(|k| {
                let coin = if rng.next_u64() % 2 == 0 { T::one() } else { T::zero() };
                if y_hat[k] >= hi {
                    T::one()
                } else if y_hat[k] <= lo {
                    T::zero()
                } else {
                    coin
                }
            })
            .collect(),
    );
    (x, y)
}

/// Default step and tolerances: `h = 1e-5` balances truncation against
/// round-off for 64-bit floats at unit-scale parameters.
pub fn default_h<T: Scalar>() -> T {
    real(1e-5)
}

pub fn default_rtol<T: Scalar>() -> T {
    real(1e-6)
}

pub fn default_atol<T: Scalar>() -> T {
    real(1e-10)
}
