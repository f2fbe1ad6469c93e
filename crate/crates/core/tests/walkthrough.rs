use sparse_wm::executive::MentalAction::*;
use sparse_wm::{Config, Reply, Session};

fn session() -> Session {
    Session::new(Config {
        vocab_capacity: 512,
        phrase_capacity: 2048,
        assoc_capacity: 16384,
        saann_capacity: 4096,
        ..Config::default()
    })
    .unwrap()
}

fn feed(s: &mut Session, lines: &[&str]) {
    for l in lines {
        s.process_text(l).unwrap();
    }
}

fn answer(s: &mut Session, q: &str) -> String {
    s.process_text(q).unwrap();
    match s.process_text(".exploitation").unwrap() {
        Reply::Answer { answer } => {
            answer.text()
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn forced_reptile_sequence_answers_mammal() {
    let mut s = session();
    feed(
        &mut s,
        &["the turtle is a reptile", "the eagle is a bird", "the dog is a mammal", "the turtle is slow"],
    );
    s.process_text("? tell me a reptile").unwrap();
    for a in [WFromWk, NextW, NextW, FlushWg, GetW, NextW, GetW, NextW, RetrAs, WFromWk, NextW, FlushWg, GetW, NextW] {
        s.perform(a).unwrap();
    }
    assert_eq!(s.buffers().word_group, "turtle");
    s.process_text(".reward").unwrap();
    s.process_text("? tell me a mammal").unwrap();
    let a = s.exploit().unwrap();
    assert_eq!(a.text(), "dog");
    assert!(a.completed);
    assert_eq!(
        a.actions,
        vec![WFromWk, NextW, NextW, FlushWg, GetW, NextW, GetW, NextW, RetrAs, WFromWk, NextW, FlushWg, GetW, NextW, WgOut, Done]
    );
}

#[test]
fn explored_categorization_generalizes() {
    let mut s = session();
    feed(
        &mut s,
        &["the turtle is a reptile", "the eagle is a bird", "the dog is a mammal", "the turtle is slow", "fish -es live in the water"],
    );
    s.process_text("? tell me a mammal").unwrap();
    for c in [".word_group mammal", ".phrase the dog is a mammal", ".word_group dog"] {
        let r = s.process_text(c).unwrap();
        assert!(matches!(r, Reply::Explored { .. }));
    }
    s.process_text(".reward").unwrap();
    assert_eq!(answer(&mut s, "? tell me a reptile"), "turtle");
    assert_eq!(answer(&mut s, "? tell me a bird"), "eagle");
}

#[test]
fn pronoun_example() {
    let mut s = session();
    feed(
        &mut s,
        &[
            "the personal pronoun for a male person is he",
            "the personal pronoun for a female person is she",
            "#####",
            "Susan is a female name",
            "Susan is a doctor",
            "Susan is drive -ing the car",
            "#####",
            "Tim is a male name",
            "Tim is a student",
            "Tim is read -ing a book",
            "#####",
            "Elisabeth is a female name",
            "Elisabeth is a secretary",
            "Elisabeth is write -ing a letter",
            "#####",
            "Max is a male name",
            "Max is an actor",
            "Max is go -ing to the theater",
            "#####",
        ],
    );
    s.process_text("? what is Max do -ing").unwrap();
    for c in [
        ".word_group Max",
        ".phrase Max is a male name",
        ".word_group male",
        ".phrase the personal pronoun for a male person is he",
        ".word_group he",
        ".partial_reward",
        ".word_group Max",
        ".phrase Max is go -ing to the theater",
        ".word_group is go -ing to the theater",
        ".reward",
    ] {
        let r = s.process_text(c).unwrap();
        assert!(matches!(r, Reply::Explored { .. } | Reply::Rewarded { .. }), "{c}");
    }
    assert_eq!(answer(&mut s, "? what is Tim do -ing"), "he is read -ing a book");
    assert_eq!(answer(&mut s, "? what is Elisabeth do -ing"), "she is write -ing a letter");
    assert_eq!(answer(&mut s, "? what is Susan do -ing"), "she is drive -ing the car");
}

