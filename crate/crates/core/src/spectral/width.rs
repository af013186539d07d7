use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::register::{BasisState, DisorderRealization};

/// Golden-rule spreading width of a basis state, with the coarse scaling
/// estimates alongside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GoldenRuleWidth {
    /// `2π J_r² ρ_f` with the empirical density of directly coupled states.
    pub gamma: f64,
    pub final_density: f64,
    pub coupled_in_window: usize,
    pub window: f64,
    /// `J_r² qn / Δ0`, no `2π`.
    pub coarse: f64,
    /// `2π J_r² qn / Δ0`.
    pub coarse_2pi: f64,
    /// No directly coupled state inside the window; `gamma` is 0.
    pub empty_window: bool,
}

/// `ρ_f` counts the states `f = i ⊕ edge` with `|E_f - E_i| <= window` and
/// divides by `2 window`. The window defaults to `Δ0`.
pub fn golden_rule_width(r: &DisorderRealization, i: BasisState, window: Option<f64>) -> Result<GoldenRuleWidth> {
    let delta0 = r.config.delta0;
    if delta0 <= 0.0 {
        return Err(Error::Domain { model: "golden-rule width", reason: "needs delta0 > 0".into() });
    }
    let window = window.unwrap_or(delta0);
    if window <= 0.0 {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
    }
    let e_i = r.diagonal_energy(i);
    let coupled_in_window =
        r.couplings.iter().filter(|c| (r.diagonal_energy(i.flip(c.mask())) - e_i).abs() <= window).count();
    let final_density = coupled_in_window as f64 / (2.0 * window);
    let jr2 = r.mean_square_coupling();
    let coarse = jr2 * r.edge_count() as f64 / delta0;
    Ok(GoldenRuleWidth {
        gamma: 2.0 * PI * jr2 * final_density,
        final_density,
        coupled_in_window,
        window,
        coarse,
        coarse_2pi: 2.0 * PI * coarse,
        empty_window: coupled_in_window == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::{sample_disorder, RegisterConfig, Topology};

    #[test]
    fn coarse_forms() {
        // 9 edges with |J| = 0.1 -> J_r² = 0.01.
        let cfg =
            RegisterConfig::new(10, Topology::Chain, 1.0, 0.1).with_j_law(crate::register::CouplingLaw::RandomSign);
        let r = sample_disorder(&cfg, 0).unwrap();
        let g = golden_rule_width(&r, BasisState(0), None).unwrap();
        assert!((g.coarse - 0.09).abs() < 1e-12);
        assert!((g.coarse_2pi - 0.5654866776461628).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_gives_zero_width() {
        let cfg = RegisterConfig::new(6, Topology::Chain, 1.0, 0.0);
        let r = sample_disorder(&cfg, 0).unwrap();
        let g = golden_rule_width(&r, BasisState(0b010101), None).unwrap();
        assert_eq!(g.gamma, 0.0);
        assert_eq!(g.coarse, 0.0);
    }

    #[test]
    fn width_scales_with_coupling_squared() {
        let cfg = RegisterConfig::new(8, Topology::Lattice, 1.0, 0.1).with_seed(5);
        let a = sample_disorder(&cfg, 3).unwrap();
        let b = sample_disorder(&cfg.with_j_scale(0.2), 3).unwrap();
        let s = BasisState(0b1010_0101);
        let (ga, gb) = (golden_rule_width(&a, s, None).unwrap(), golden_rule_width(&b, s, None).unwrap());
        assert!(ga.gamma > 0.0);
        assert!((gb.gamma / ga.gamma - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_is_rejected() {
        let cfg = RegisterConfig::new(4, Topology::Chain, 0.0, 0.1);
        let r = sample_disorder(&cfg, 0).unwrap();
        assert!(golden_rule_width(&r, BasisState(0), None).is_err());
    }
}
