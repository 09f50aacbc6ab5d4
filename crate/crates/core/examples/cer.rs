//! Character error rate and pseudo-label error rate on hand-picked pairs.

use alcr::metrics::{cer, char_edit_distance, p_cer, EvalPair};

fn main() -> alcr::Result<()> {
    for (r, h) in [
        ("abcd", "abcd"),
        ("abcd", "abed"),
        ("kitten", "sitting"),
        ("", "abc"),
        ("abc", ""),
    ] {
        println!("{r:>8} vs {h:<8} distance {}", char_edit_distance(r, h));
    }
    let pairs = [EvalPair::from_text("abcd", "abed"), EvalPair::from_text("efgh", "efgh")];
    println!("corpus CER over two utterances: {:.1}%", cer(&pairs)?);

    let truth = vec![
        ("u1".to_string(), vec!['a', 'b']),
        ("u2".to_string(), vec!['c', 'd', 'e']),
    ];
    let pseudo = vec![("u1".to_string(), vec!['a', 'b']), ("u2".to_string(), vec!['c', 'e'])];
    println!("P-CER of the pseudo-labels: {:.1}%", p_cer(&pseudo, &truth)?);
    Ok(())
}
