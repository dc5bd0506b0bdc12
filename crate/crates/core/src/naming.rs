/// Canonical kebab-case form of a rule name.
///
/// `enforceEmojiLimit` and `enforce-emoji-limit` map to the same key. Names
/// that already contain separators are only lower-cased, so
/// `citation-bibTeX-present` becomes `citation-bibtex-present`.
pub fn canonical_rule_name(name: &str) -> String {
    let name = name.trim();
    if name.contains(['-', '_', ' ']) {
        return name
            .chars()
            .map(|c| if c == '_' || c == ' ' { '-' } else { c.to_ascii_lowercase() })
            .collect();
    }
    let chars: Vec<char> = name.chars().collect();
    let mut out = String::with_capacity(name.len() + 4);
    for (i, &c) in chars.iter().enumerate() {
        if c.is_uppercase() && i > 0 {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                out.push('-');
            }
        }
        out.extend(c.to_lowercase());
    }
    out
}
