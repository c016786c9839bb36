//! Attribute and k-joint metrics of a deliberately distorted population,
//! with the 45-degree CSV for one joint.

use popsynth::dataset::Dataset;
use popsynth::eval::{
    category_adherence, category_coverage, joint_table, r_squared, srmse, tv_complement,
    write_forty_five_degree,
};
use popsynth::toy::{generate_toy_population, ToyPopulationSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ToyPopulationSpec {
        n_rows: 20_000,
        ..ToyPopulationSpec::default()
    };
    let gt = generate_toy_population(&spec)?;
    // Another draw from the same mixture, with attr0 shifted one category up.
    let other = generate_toy_population(&ToyPopulationSpec { seed: 99, ..spec })?;
    let k0 = gt.schema().attribute(0).len() as u32;
    let rows = other
        .rows()
        .map(|r| {
            let mut r = r.to_vec();
            r[0] = r[0].map(|c| (c + 1) % k0);
            r
        })
        .collect();
    let syn = Dataset::new(gt.schema().clone(), rows)?;

    println!(
        "{:<6} {:>8} {:>8} {:>9}",
        "attr", "coverage", "tv", "adherence"
    );
    for a in gt.schema().attributes() {
        println!(
            "{:<6} {:>8.3} {:>8.3} {:>9.3}",
            a.name,
            category_coverage(&gt, &syn, &a.name)?,
            tv_complement(&gt, &syn, &a.name)?,
            category_adherence(&gt, &syn, &a.name)?
        );
    }
    for subset in [vec!["attr0", "attr1"], vec!["attr2", "attr3", "attr4"]] {
        let (g, s) = (joint_table(&gt, &subset)?, joint_table(&syn, &subset)?);
        println!(
            "{:?}: N_b {} SRMSE {:.4} R2 {:.4}",
            subset,
            g.n_cells(),
            srmse(&g, &s)?,
            r_squared(&g, &s)?
        );
    }
    let (g, s) = (
        joint_table(&gt, &["attr0", "attr1"])?,
        joint_table(&syn, &["attr0", "attr1"])?,
    );
    write_forty_five_degree(&g, &s, std::io::stdout().lock())?;
    Ok(())
}
