use super::lattice::LatticeLine;
use super::op::norm;
use super::LinalgError;
use crate::C64;

/// Normalized discretized Gaussian e^{−(q−q_c)²/(4w²)} e^{i p_c q/ħ}.
#[derive(Debug, Clone)]
pub struct Packet {
    pub q_c: f64,
    pub p_c: f64,
    pub width: f64,
    pub vector: Vec<C64>,
}

pub fn gaussian_packet(l: &LatticeLine, q_c: f64, p_c: f64, width: f64) -> Result<Packet, LinalgError> {
    let (lo, hi) = (l.q0(), l.q0() + l.length());
    if q_c - 4.0 * width < lo || q_c + 4.0 * width > hi {
        return Err(LinalgError::PacketCentre { centre: q_c });
    }
    let mut v: Vec<C64> = (0..l.n())
        .map(|j| {
            let q = l.q(j);
            C64::from_polar((-(q - q_c).powi(2) / (4.0 * width * width)).exp(), p_c * q / l.hbar())
        })
        .collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let edge: f64 = v
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let q = l.q(*j);
            q < lo + 4.0 * width || q > hi - 4.0 * width
        })
        .map(|(_, x)| x.norm_sqr())
        .sum();
    if edge > 1e-6 {
        return Err(LinalgError::PacketBoundary(edge));
    }
    Ok(Packet { q_c, p_c, width, vector: v })
}

impl Packet {
    pub fn mean_q(&self, l: &LatticeLine) -> f64 {
        self.vector.iter().enumerate().map(|(j, x)| x.norm_sqr() * l.q(j)).sum()
    }

    pub fn mean_p(&self, l: &LatticeLine) -> f64 {
        let mut w = self.vector.clone();
        l.to_momentum(&mut w);
        w.iter().enumerate().map(|(j, x)| x.norm_sqr() * l.p(j)).sum()
    }
}
