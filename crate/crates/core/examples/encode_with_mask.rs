//! One-hot encoding with a missing-value mask, and decoding back.

use popsynth::dataset::Dataset;
use popsynth::encoding::{decode, encode, DecodeMode};
use popsynth::schema::{Attribute, CategoricalSchema};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schema = CategoricalSchema::new(vec![
        Attribute::new("sex", ["f", "m"]),
        Attribute::new("age", ["0-17", "18-64", "65+"]),
        Attribute::new("mode", ["bike", "car", "transit", "walk"]),
    ])?;
    let csv = "sex,age,mode\nf,18-64,bike\nm,,car\n,65+,walk\n";
    let data = Dataset::read_csv(csv.as_bytes(), Some(&schema))?;

    let (x, y) = encode(&data);
    println!("layout {:?}", schema.category_counts());
    for r in 0..data.n_rows() {
        println!("x {:?}\ny {:?}", x.tensor().row(r), y.tensor().row(r));
    }
    println!("blocks masked out: {}", y.zero_blocks(&schema));

    // Missing blocks are all zero and cannot be decoded; fill a complete row.
    let complete = data.select_rows(&[0]);
    let (x, _) = encode(&complete);
    let back = decode(x.tensor(), &schema, DecodeMode::Argmax, 0)?;
    assert_eq!(back, complete);
    println!("round trip ok");
    Ok(())
}
