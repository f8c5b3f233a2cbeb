//! Non-Gaussian grid marginals never beat the Gaussian constant for the
//! barycenter form: the smallest deficit over a randomized family.

use santalo_lab::sharp_constant::{barycenter_form_constant, empirical_d_scan, encode_barycenter_form, test_family};

fn main() -> santalo_lab::Result<()> {
    let lambda = [0.3, 0.7];
    let p = encode_barycenter_form(&lambda, 1)?;
    let dg = barycenter_form_constant(&lambda, 1)?;
    let family = test_family(2, 100, 1024, 42)?;
    let scan = empirical_d_scan(&p, &family, dg, 2e-2)?;
    let mut members = scan.members.clone();
    members.sort_by(|a, b| a.deficit.total_cmp(&b.deficit));
    for m in members.iter().take(5) {
        println!("{:40} deficit {:.5} (exact sup: {})", m.label, m.deficit, m.exact_sup);
    }
    println!("min deficit {:.5}, failures {}", scan.min_deficit, scan.failures);
    Ok(())
}
