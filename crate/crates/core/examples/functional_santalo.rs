//! The functional inequality `Π(∫e^{−f_i})^{c_i} ≤ e^{D − Q(f)}` for the
//! barycenter form, its equality case, translations, random feasible
//! potentials and the transfer back to the entropy side.

use santalo_lab::functional::{
    bs_inequality_check, duality_transfer, feasibility_check, random_feasible_potentials, BsOptions, Potential,
    ProbeSpec,
};
use santalo_lab::grid::Grid;
use santalo_lab::sharp_constant::{barycenter_form_constant, encode_barycenter_form};

fn main() -> santalo_lab::Result<()> {
    let lambda = [0.5, 0.5];
    let p = encode_barycenter_form(&lambda, 1)?;
    let dg = barycenter_form_constant(&lambda, 1)?;
    let grid = Grid::line(-12.0, 12.0, 480)?;
    let quad = |a: f64, v: f64| Potential::new(grid.clone(), move |x: &[f64]| Some(0.5 * a * (x[0] - v).powi(2)));

    let sat = [quad(1.0, 0.0), quad(1.0, 0.0)];
    let r = bs_inequality_check(&sat, p.c(), p.q(), dg, &BsOptions::default())?;
    println!("saturators: lhs {:.10} rhs {:.10} deficit {:.2e}", r.lhs, r.rhs, r.deficit);

    // Translating both potentials the same way breaks the constraint.
    let same = [quad(1.0, 1.0).sample()?, quad(1.0, 1.0).sample()?];
    let f = feasibility_check(&same, p.c(), p.q(), ProbeSpec::default())?;
    println!("common shift: min margin {:.4} at {:?}", f.min_margin, f.witness);

    let opposite = [quad(1.0, 1.0), quad(1.0, -1.0)];
    let r = bs_inequality_check(&opposite, p.c(), p.q(), dg, &BsOptions::default())?;
    println!("opposite shifts: deficit {:.6}, Q(f) = {}", r.deficit, r.meta["q_functional"]);

    let mut worst = f64::INFINITY;
    for seed in 0..10 {
        let fs = random_feasible_potentials(&lambda, 1000, seed)?;
        worst = worst.min(bs_inequality_check(&fs, p.c(), p.q(), dg, &BsOptions::default())?.deficit);
    }
    println!("10 random feasible pairs: smallest deficit {worst:.6}");

    let r = duality_transfer(&sat, p.c(), p.q(), dg, 2e-2)?;
    println!("entropy side: Σ c_i h(μ_i) = {:.8} ≤ {:.8}", r.lhs, r.rhs);
    Ok(())
}
