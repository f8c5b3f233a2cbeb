//! The Gaussian constant for the barycenter form by multi-start optimization,
//! compared with `(d/2) log(2π) Σ λ_i(1 − λ_i)`, plus the `δ → 0` scan.

use std::time::Instant;

use santalo_lab::sharp_constant::{
    barycenter_form_constant, dg_compute, dg_delta_limit, encode_barycenter_form, DgOptions,
};

fn main() -> santalo_lab::Result<()> {
    let cases: [(&[f64], usize); 3] = [(&[0.5, 0.5], 1), (&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1), (&[0.3, 0.7], 2)];
    for (lambda, d) in cases {
        let p = encode_barycenter_form(lambda, d)?;
        let t = Instant::now();
        let r = dg_compute(&p, &DgOptions::default())?;
        println!(
            "λ = {lambda:?}, d = {d}: D_g = {:.9} (closed form {:.9}), {:?}, {:.2?}",
            r.value,
            barycenter_form_constant(lambda, d)?,
            r.status,
            t.elapsed()
        );
    }
    let p = encode_barycenter_form(&[0.5, 0.5], 1)?;
    let limit = dg_delta_limit(&p, &[1e-1, 1e-2, 1e-3, 1e-4], &DgOptions::default())?;
    for (d, v) in limit.deltas.iter().zip(&limit.values) {
        println!("δ = {d:.0e}: {v:.9}");
    }
    Ok(())
}
