use std::fmt::Write as _;
use std::path::PathBuf;

use coherence::numerics::binary_entropy;
use coherence::power::qubit_cgen;

use crate::{Failure, RunConfig};

/// Decimal rendering with `digits` significant digits.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn cmd_figures(cfg: &RunConfig) -> Result<(), Failure> {
    let dir = cfg.output_path.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let pi = std::f64::consts::PI;
    let n = cfg.grid_points;
    let mut fig1 = String::from("theta,cgen,h2_cos2\n");
    let mut fig2 = String::from("theta,alpha_star\n");
    for i in 0..n {
        let theta = std::f64::consts::FRAC_PI_4 * i as f64 / (n - 1) as f64;
        let (cgen, alpha) = qubit_cgen(theta)?;
        let h = binary_entropy(theta.cos().powi(2))?;
        let t = sig(theta / pi, 12);
        writeln!(fig1, "{t},{},{}", sig(cgen, 12), sig(h, 12)).expect("writing to a String");
        writeln!(fig2, "{t},{}", sig(alpha / pi, 12)).expect("writing to a String");
    }
    let p1 = dir.join("fig1.csv");
    let p2 = dir.join("fig2.csv");
    std::fs::write(&p1, fig1)?;
    std::fs::write(&p2, fig2)?;
    println!("wrote {} and {} ({n} rows each)", p1.display(), p2.display());
    Ok(())
}
