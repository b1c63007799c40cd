//! Shared fixtures for the benchmark targets.

use smaq_core::sma::SimulationWindow;
use smaq_core::MaterialParameters;

/// Equiatomic NiTi-like nominal set used across all benchmarks.
pub fn nominal() -> MaterialParameters {
    MaterialParameters {
        e_a: 60e9,
        e_m: 40e9,
        m_s: 300.0,
        m_f: 270.0,
        a_s: 307.0,
        a_f: 318.0,
        c_a: 9e6,
        c_m: 10.3e6,
        h_sat: 0.034,
        k: 0.02e-6,
        n1: 0.5,
        n2: 0.5,
        n3: 0.5,
        n4: 0.5,
        t0: 300.0,
        anchor_stress: 300e6,
    }
}

pub fn window(n_grid: usize) -> SimulationWindow {
    SimulationWindow { t_max: 430.0, t_min: 210.0, n_grid }
}
