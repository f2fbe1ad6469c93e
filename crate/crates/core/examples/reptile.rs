//! Teaches one categorization question and asks two new ones.

use sparse_wm::{Config, Session};

fn main() -> sparse_wm::Result<()> {
    let mut s = Session::new(Config {
        vocab_capacity: 512,
        phrase_capacity: 2048,
        assoc_capacity: 16384,
        saann_capacity: 4096,
        ..Config::default()
    })?;
    for line in [
        "the turtle is a reptile",
        "the eagle is a bird",
        "the dog is a mammal",
        "#####",
        "? tell me a reptile",
        ".word_group reptile",
        ".phrase the turtle is a reptile",
        ".word_group turtle",
        ".reward",
    ] {
        if let Some(text) = s.process_text(line)?.text() {
            println!("{line:<32} -> {text}");
        }
    }
    for question in ["? tell me a mammal", "? tell me a bird"] {
        s.process_text(question)?;
        let answer = s.exploit()?;
        println!("{question:<32} -> {} ({} steps)", answer.text(), answer.actions.len());
    }
    Ok(())
}
