//! Loads a small CSV and shows how examples fall into folds.

use cvforest::*;

const CSV: &str = "\
outlook,temp,windy,play
sunny,29.4,no,no
sunny,26.7,yes,no
overcast,28.3,no,yes
rain,21.1,no,yes
rain,20.0,no,yes
rain,18.3,yes,no
overcast,17.8,yes,yes
sunny,22.2,no,no
sunny,20.6,no,yes
rain,23.9,no,yes
sunny,23.9,yes,yes
overcast,22.2,yes,yes
overcast,27.2,no,yes
rain,21.7,yes,no
";

fn main() -> Result<()> {
    let ds = load_dataset(CSV.as_bytes(), &LoadOptions::new("play"))?;
    for a in &ds.schema().attributes {
        println!("{:<8} {:?}", a.name, a.kind);
    }

    let folds = assign_folds(&ds, 3, 7, true)?;
    println!("part sizes {:?}", folds.part_sizes());
    for i in 0..=folds.n() {
        // T_0 is the whole set, T_i leaves out part i
        println!("T_{i}: {:?}", training_view(&ds, &folds, i)?);
    }
    Ok(())
}
