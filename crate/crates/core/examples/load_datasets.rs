//! Reads the bundled IDX and MovieLens fixtures, or files given on the command line:
//! `load_datasets [images labels [ratings]]`.

use std::path::PathBuf;

use dropcap::datasets::{load_binary_pair, parse_idx, parse_movielens};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let images = args.first().cloned().unwrap_or_else(|| fixtures.join("tiny-images.idx3-ubyte"));
    let labels = args.get(1).cloned().unwrap_or_else(|| fixtures.join("tiny-labels.idx1-ubyte"));
    let ratings = args.get(2).cloned().unwrap_or_else(|| fixtures.join("ratings.dat"));

    let t = parse_idx(&images)?;
    println!("{}: dims {:?}", images.display(), t.dims);
    let set = load_binary_pair(&images, &labels, 4, 7)?;
    let positives = (0..set.len()).filter(|&i| set.targets()[(0, i)] > 0.0).count();
    println!("classes 4 vs 7: {} examples of dimension {}, {positives} labelled +1", set.len(), set.input_dim());

    let ml = parse_movielens(&ratings, true)?;
    println!(
        "{}: {} ratings, {} users, {} movies, mean rating {:.3}",
        ratings.display(),
        ml.sample.len(),
        ml.user_ids.len(),
        ml.movie_ids.len(),
        ml.offset
    );
    Ok(())
}
