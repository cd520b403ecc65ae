use alloc::string::String;
use alloc::vec::Vec;

/// Citation marker kept verbatim by [`tokenize`].
pub const REF_TOKEN: &str = "[REF]";

/// Lowercases, splits on Unicode whitespace and strips leading and trailing
/// non-alphanumeric characters from each piece. A piece that reduces to the
/// citation marker `[REF]` is kept as exactly `[REF]`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split_whitespace() {
        let bracketed = piece.trim_matches(|c: char| !c.is_alphanumeric() && c != '[' && c != ']');
        if bracketed.eq_ignore_ascii_case(REF_TOKEN) {
            out.push(String::from(REF_TOKEN));
            continue;
        }
        let core = piece.trim_matches(|c: char| !c.is_alphanumeric());
        if !core.is_empty() {
            out.push(core.chars().flat_map(char::to_lowercase).collect());
        }
    }
    out
}
