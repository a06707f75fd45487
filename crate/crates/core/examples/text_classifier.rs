//! Trains the bag-of-n-grams classifier on a toy two-sided corpus, saves it
//! and predicts with the reloaded copy.
//!
//! ```text
//! cargo run --example text_classifier
//! ```

use polarimeter::classifier::{self, ClassifierConfig};
use polarimeter::corpus::{Label, TrainingCorpus, UserDocument};

fn doc(user: &str, text: &str) -> UserDocument {
    UserDocument {
        user_id: user.into(),
        text: text.into(),
        source_tweet_count: 1,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = TrainingCorpus::from_examples(vec![
        (Label::C1, doc("a1", "lower taxes small government freedom")),
        (Label::C1, doc("a2", "freedom and lower taxes for everyone")),
        (Label::C1, doc("a3", "small government means freedom")),
        (Label::C2, doc("b1", "public healthcare and fair wages")),
        (Label::C2, doc("b2", "fair wages for workers now")),
        (Label::C2, doc("b3", "workers deserve public healthcare")),
    ])?;
    let config = ClassifierConfig {
        dim: 16,
        lr: 0.5,
        epochs: 200,
        ..Default::default()
    };
    let (model, report) = classifier::train_with_report(&corpus, &config)?;
    println!(
        "vocabulary {} words, loss {:.3} -> {:.3}",
        model.vocabulary().len(),
        report.epoch_losses[0],
        report.epoch_losses.last().unwrap()
    );

    let path = std::env::temp_dir().join("polarimeter-example-model.bin");
    classifier::save(&model, &path)?;
    let model = classifier::load(&path)?;
    for text in [
        "freedom and small government",
        "healthcare for workers",
        "completely unrelated words",
    ] {
        let p = model.predict(text);
        println!(
            "{text:>30}: {:?} p={:.3}{}",
            p.label,
            p.probability,
            if p.no_features { " (no known features)" } else { "" }
        );
    }
    std::fs::remove_file(path)?;
    Ok(())
}
