const OPENING: &[char] = &['"', '\'', '(', '[', '{', '`'];
const CLOSING: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '}'];

/// Whitespace tokenization with leading and trailing punctuation split off.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut rest = chunk;
        let mut lead = Vec::new();
        while let Some(c) = rest.chars().next().filter(|c| OPENING.contains(c)) {
            if rest.len() == c.len_utf8() {
                break;
            }
            lead.push(c.to_string());
            rest = &rest[c.len_utf8()..];
        }
        let mut trail = Vec::new();
        while let Some(c) = rest.chars().last().filter(|c| CLOSING.contains(c)) {
            if rest.len() == c.len_utf8() {
                break;
            }
            trail.push(c.to_string());
            rest = &rest[..rest.len() - c.len_utf8()];
        }
        out.extend(lead);
        out.push(rest.to_string());
        out.extend(trail.into_iter().rev());
    }
    out
}

/// Joins tokens with spaces, attaching closing punctuation to the previous token.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        let t = t.as_ref();
        let attach = !t.is_empty() && t.chars().all(|c| CLOSING.contains(&c) && c != '"' && c != '\'');
        if i > 0 && !attach {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}
