use crate::tags::Tag;

pub(crate) const START: &str = "-START-";
pub(crate) const END: &str = "-END-";

/// Lowercases and collapses numeric tokens to `!DIGITS`.
pub(crate) fn normalize(word: &str) -> String {
    let numeric = word.chars().any(|c| c.is_ascii_digit())
        && word.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',');
    if numeric {
        "!DIGITS".to_string()
    } else {
        word.to_lowercase()
    }
}

fn suffix(word: &str, n: usize) -> &str {
    match word.char_indices().rev().nth(n - 1) {
        Some((i, _)) => &word[i..],
        None => word,
    }
}

/// Feature strings for position `i`. `context` holds the normalized words of
/// the sentence; `prev`/`prev2` are the tags already predicted to the left.
pub(crate) fn extract(
    i: usize,
    word: &str,
    context: &[String],
    prev: Option<Tag>,
    prev2: Option<Tag>,
    out: &mut Vec<String>,
) {
    out.clear();
    let norm = &context[i];
    let tag_str = |t: Option<Tag>| t.map_or(START, Tag::as_str);
    let prev_word = if i > 0 { context[i - 1].as_str() } else { START };
    let next_word = context.get(i + 1).map_or(END, String::as_str);

    out.push("bias".to_string());
    out.push(format!("w {norm}"));
    for n in 1..=3 {
        out.push(format!("s{n} {}", suffix(norm, n)));
    }
    if let Some(c) = word.chars().next() {
        out.push(format!("p1 {c}"));
    }
    out.push(format!("t-1 {}", tag_str(prev)));
    out.push(format!("t-2,t-1 {} {}", tag_str(prev2), tag_str(prev)));
    out.push(format!("w-1 {prev_word}"));
    out.push(format!("w+1 {next_word}"));
    out.push(format!("s3-1 {}", suffix(prev_word, 3)));
    out.push(format!("s3+1 {}", suffix(next_word, 3)));
    if word.chars().any(|c| c.is_ascii_digit()) {
        out.push("has-digit".to_string());
    }
    if word.contains('-') {
        out.push("has-hyphen".to_string());
    }
    if word.chars().next().is_some_and(char::is_uppercase) {
        out.push("is-capitalized".to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_normalization() {
        assert_eq!(normalize("1,000"), "!DIGITS");
        assert_eq!(normalize("1990"), "!DIGITS");
        assert_eq!(normalize("1990s"), "1990s");
        assert_eq!(normalize("Dogs"), "dogs");
    }

    #[test]
    fn template() {
        let ctx: Vec<String> = ["the", "dogs", "bark"].iter().map(|s| s.to_string()).collect();
        let mut f = Vec::new();
        extract(1, "Dogs", &ctx, Some(Tag::DT), None, &mut f);
        for expected in [
            "bias",
            "w dogs",
            "s1 s",
            "s2 gs",
            "s3 ogs",
            "p1 D",
            "t-1 DT",
            "t-2,t-1 -START- DT",
            "w-1 the",
            "w+1 bark",
            "s3-1 the",
            "s3+1 ark",
            "is-capitalized",
        ] {
            assert!(f.iter().any(|x| x == expected), "missing {expected}: {f:?}");
        }
        assert!(!f.iter().any(|x| x == "has-digit"));
        assert_eq!(suffix("a", 3), "a");
        assert_eq!(suffix("wörd", 3), "örd");
    }
}
