//! Gauges, volumes by the layer-cake formula and the volume-product bound.

use santalo_lab::functional::{body_volume_via_layercake, geometry_check, minkowski, ConvexBody};
use santalo_lab::linalg::SymMatrix;

fn main() -> santalo_lab::Result<()> {
    let bodies = [
        ("disc", ConvexBody::ball(1.0, 2)?),
        ("ellipse 2x1", ConvexBody::ellipsoid(SymMatrix::from_diagonal(&[4.0, 1.0])?)?),
        ("triangle", ConvexBody::polytope(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]])?),
    ];
    for (name, b) in &bodies {
        println!(
            "{name:12} p(1,1) = {:.6}  volume {:.9}  layer cake {:.9}",
            minkowski(b, &[1.0, 1.0])?,
            b.volume()?,
            body_volume_via_layercake(b)?
        );
    }

    let pair = [ConvexBody::symmetric_interval(2.0)?, ConvexBody::symmetric_interval(0.5)?];
    let r = geometry_check(&pair, &[0.5, 0.5], 1e-3)?;
    println!("[-2,2] and its polar: {:?}, deficit {:.2e}", r.verdict, r.deficit);

    let shrunk = [ConvexBody::symmetric_interval(2.0)?, ConvexBody::symmetric_interval(0.45)?];
    let r = geometry_check(&shrunk, &[0.5, 0.5], 1e-3)?;
    println!("second body shrunk by 0.9: {:?}, deficit {:.4}", r.verdict, r.deficit);
    Ok(())
}
