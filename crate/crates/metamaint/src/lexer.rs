//! Lightweight per-language lexers producing comment- and whitespace-insensitive
//! token streams, plus the token-trigram sets the divergence metrics are built on.
//!
//! The lexers only need to get three things right: where comments are, where
//! string literals start and end, and how punctuation groups into operators.
//! They do not parse. String and character literals are kept verbatim as single
//! tokens (quotes included) so that an edited literal shows up as a changed
//! trigram. Lexing is total: bytes that decode to nothing sensible degrade to
//! one-byte tokens instead of failing.

use std::collections::BTreeSet;

use crate::lang::SourceLang;

/// One lexeme. Never empty, never from inside a comment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    pub text: String,
}

impl Token {
    fn new(text: String) -> Self {
        debug_assert!(!text.is_empty());
        Token { text }
    }
}

/// A consecutive token-text triple.
pub type Trigram = (String, String, String);

/// The set of token trigrams of one file, with set semantics (no multiplicity).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrigramSet {
    trigrams: BTreeSet<Trigram>,
}

impl TrigramSet {
    pub fn new() -> Self {
        TrigramSet::default()
    }

    pub fn insert(&mut self, t: Trigram) -> bool {
        self.trigrams.insert(t)
    }

    pub fn len(&self) -> usize {
        self.trigrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trigrams.is_empty()
    }

    pub fn contains(&self, t: &Trigram) -> bool {
        self.trigrams.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trigram> {
        self.trigrams.iter()
    }

    pub fn intersection_count(&self, other: &TrigramSet) -> usize {
        // Iterate the smaller set.
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().filter(|t| large.contains(t)).count()
    }
}

impl FromIterator<Trigram> for TrigramSet {
    fn from_iter<I: IntoIterator<Item = Trigram>>(iter: I) -> Self {
        TrigramSet {
            trigrams: iter.into_iter().collect(),
        }
    }
}

/// Tokenize `content` under the rules of `lang`, dropping comments and whitespace.
pub fn tokenize(content: &[u8], lang: SourceLang) -> Vec<Token> {
    Lexer::new(content, lang).run()
}

/// All consecutive token triples; fewer than three tokens gives the empty set.
pub fn trigrams(tokens: &[Token]) -> TrigramSet {
    tokens
        .windows(3)
        .map(|w| (w[0].text.clone(), w[1].text.clone(), w[2].text.clone()))
        .collect()
}

/// Convenience for scanning raw bytes straight to a trigram set.
pub fn trigram_set(content: &[u8], lang: SourceLang) -> TrigramSet {
    trigrams(&tokenize(content, lang))
}

/// True iff the file has no tokens at all: empty, whitespace-only, or comment-only.
pub fn is_empty_source(content: &[u8], lang: SourceLang) -> bool {
    tokenize(content, lang).is_empty()
}

/// Multi-character operators per language, longest first so that a linear scan
/// of the table is a longest-match.
fn operator_table(lang: SourceLang) -> &'static [&'static str] {
    match lang {
        SourceLang::C => &[
            "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
            "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=", "##",
        ],
        SourceLang::Cpp => &[
            "<<=", ">>=", "<=>", "->*", "...", "->", "::", ".*", "++", "--", "<<", ">>", "<=",
            ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=", "##",
        ],
        SourceLang::Java => &[
            ">>>=", ">>>", "<<=", ">>=", "->", "::", "++", "--", "<<", ">>", "<=", ">=", "==",
            "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=",
        ],
        SourceLang::JavaScript => &[
            ">>>=", "===", "!==", "**=", "...", "?.", "??=", "&&=", "||=", ">>>", "<<=", ">>=",
            "=>", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "??", "**", "+=",
            "-=", "*=", "/=", "%=", "&=", "^=", "|=",
        ],
        SourceLang::Python => &[
            "**=", "//=", "<<=", ">>=", ":=", "->", "**", "//", "<<", ">>", "<=", ">=", "==",
            "!=", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=", "@=",
        ],
        SourceLang::Php => &[
            "===", "!==", "<=>", "**=", "??=", "?->", "...", ">>=", "<<=", "=>", "->", "::",
            "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "<>", "&&", "||", "??", "**", "+=",
            "-=", "*=", "/=", "%=", ".=", "&=", "^=", "|=",
        ],
        SourceLang::Ruby => &[
            "<=>", "===", "**=", "<<=", ">>=", "&&=", "||=", "...", "=~", "!~", "::", "..",
            "=>", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "**", "+=", "-=", "*=", "/=",
            "%=", "&=", "^=", "|=",
        ],
    }
}

struct Lexer<'a> {
    bytes: &'a [u8],
    pos: usize,
    lang: SourceLang,
    tokens: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(bytes: &'a [u8], lang: SourceLang) -> Self {
        Lexer {
            bytes,
            pos: 0,
            lang,
            tokens: Vec::new(),
        }
    }

    fn run(mut self) -> Vec<Token> {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if is_whitespace(b) {
                self.pos += 1;
            } else if self.try_comment() {
                // consumed
            } else if self.try_string() {
                // consumed
            } else if b.is_ascii_digit() || (b == b'.' && self.peek_is_digit(1)) {
                self.lex_number();
            } else if is_ident_start(b) {
                self.lex_identifier();
            } else if b < 0x80 {
                self.lex_punct();
            } else {
                self.lex_non_ascii();
            }
        }
        self.tokens
    }

    fn rest(&self) -> &[u8] {
        &self.bytes[self.pos..]
    }

    fn peek_is_digit(&self, off: usize) -> bool {
        self.bytes
            .get(self.pos + off)
            .is_some_and(u8::is_ascii_digit)
    }

    fn at_line_start(&self) -> bool {
        self.pos == 0 || self.bytes[self.pos - 1] == b'\n'
    }

    fn push(&mut self, text: String) {
        self.tokens.push(Token::new(text));
    }

    /// Consume a comment if one starts here. Line comments stop before the
    /// newline; block comments swallow their terminator.
    fn try_comment(&mut self) -> bool {
        let rest = self.rest();
        match self.lang {
            SourceLang::C | SourceLang::Cpp | SourceLang::Java | SourceLang::JavaScript => {
                if rest.starts_with(b"//") {
                    self.skip_line();
                    true
                } else if rest.starts_with(b"/*") {
                    self.skip_block_comment();
                    true
                } else {
                    false
                }
            }
            SourceLang::Python => {
                if rest.starts_with(b"#") {
                    self.skip_line();
                    true
                } else {
                    false
                }
            }
            SourceLang::Php => {
                if rest.starts_with(b"//") || rest.starts_with(b"#") {
                    self.skip_line();
                    true
                } else if rest.starts_with(b"/*") {
                    self.skip_block_comment();
                    true
                } else {
                    false
                }
            }
            SourceLang::Ruby => {
                if rest.starts_with(b"#") {
                    self.skip_line();
                    true
                } else if self.at_line_start() && starts_embedded_doc(rest, b"=begin") {
                    self.skip_ruby_embedded_doc();
                    true
                } else {
                    false
                }
            }
        }
    }

    fn skip_line(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
    }

    fn skip_block_comment(&mut self) {
        self.pos += 2; // over "/*"
        while self.pos < self.bytes.len() {
            if self.rest().starts_with(b"*/") {
                self.pos += 2;
                return;
            }
            self.pos += 1;
        }
        // unterminated: swallowed to EOF
    }

    fn skip_ruby_embedded_doc(&mut self) {
        // at "=begin" on its own line; runs through the "=end" line.
        self.skip_line();
        while self.pos < self.bytes.len() {
            self.pos += 1; // over the newline
            if starts_embedded_doc(self.rest(), b"=end") {
                self.skip_line();
                return;
            }
            self.skip_line();
        }
    }

    /// Consume a string or character literal if one starts here, pushing it
    /// verbatim (quotes included) as one token.
    fn try_string(&mut self) -> bool {
        let rest = self.rest();
        match self.lang {
            SourceLang::C | SourceLang::Cpp | SourceLang::Java => {
                if rest.starts_with(b"\"") || rest.starts_with(b"'") {
                    self.lex_quoted(&[self.bytes[self.pos]]);
                    true
                } else {
                    false
                }
            }
            SourceLang::JavaScript | SourceLang::Ruby => {
                if rest.starts_with(b"\"") || rest.starts_with(b"'") || rest.starts_with(b"`") {
                    self.lex_quoted(&[self.bytes[self.pos]]);
                    true
                } else {
                    false
                }
            }
            SourceLang::Php => {
                if rest.starts_with(b"\"") || rest.starts_with(b"'") {
                    self.lex_quoted(&[self.bytes[self.pos]]);
                    true
                } else {
                    false
                }
            }
            SourceLang::Python => {
                if rest.starts_with(b"\"\"\"") || rest.starts_with(b"'''") {
                    let delim = [rest[0], rest[0], rest[0]];
                    self.lex_quoted(&delim);
                    true
                } else if rest.starts_with(b"\"") || rest.starts_with(b"'") {
                    self.lex_quoted(&[self.bytes[self.pos]]);
                    true
                } else {
                    false
                }
            }
        }
    }

    fn lex_quoted(&mut self, delim: &[u8]) {
        let start = self.pos;
        self.pos += delim.len();
        while self.pos < self.bytes.len() {
            if self.bytes[self.pos] == b'\\' {
                self.pos = (self.pos + 2).min(self.bytes.len());
            } else if self.rest().starts_with(delim) {
                self.pos += delim.len();
                break;
            } else {
                self.pos += 1;
            }
        }
        // unterminated literals run to EOF
        let text = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
        self.push(text);
    }

    fn lex_number(&mut self) {
        let start = self.pos;
        self.pos += 1;
        let hexish = self.rest().starts_with(b"x") || self.rest().starts_with(b"X");
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.pos += 1;
            } else if b == b'.' && self.peek_is_digit(1) {
                self.pos += 1;
            } else if (b == b'+' || b == b'-') && self.exponent_sign_ok(start, hexish) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
        self.push(text);
    }

    /// A +/- continues the number only directly after an exponent marker:
    /// e/E for decimal literals, p/P for hex float literals.
    fn exponent_sign_ok(&self, start: usize, hexish: bool) -> bool {
        if self.pos == start {
            return false;
        }
        let prev = self.bytes[self.pos - 1];
        if hexish {
            prev == b'p' || prev == b'P'
        } else {
            prev == b'e' || prev == b'E'
        }
    }

    fn lex_identifier(&mut self) {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if is_ident_continue(b) {
                self.pos += 1;
            } else if b >= 0x80 {
                match decode_utf8(&self.bytes[self.pos..]) {
                    Some((ch, n)) if ch.is_alphanumeric() => self.pos += n,
                    _ => break,
                }
            } else {
                break;
            }
        }
        let text = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
        self.push(text);
    }

    fn lex_punct(&mut self) {
        let rest = self.rest();
        for op in operator_table(self.lang) {
            if rest.starts_with(op.as_bytes()) {
                self.pos += op.len();
                self.push((*op).to_string());
                return;
            }
        }
        self.pos += 1;
        self.push((rest[0] as char).to_string());
    }

    /// Valid non-ASCII letters begin identifiers; everything else that decodes
    /// is a one-codepoint token; undecodable bytes are one-byte opaque tokens.
    fn lex_non_ascii(&mut self) {
        match decode_utf8(self.rest()) {
            Some((ch, n)) => {
                if ch.is_alphabetic() {
                    self.lex_identifier();
                } else {
                    self.pos += n;
                    self.push(ch.to_string());
                }
            }
            None => {
                let b = self.bytes[self.pos];
                self.pos += 1;
                self.push(format!("\\x{b:02x}"));
            }
        }
    }
}

fn is_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n' | 0x0b | 0x0c)
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// `marker` ("=begin"/"=end") at the current position followed by whitespace or EOF.
fn starts_embedded_doc(rest: &[u8], marker: &[u8]) -> bool {
    rest.starts_with(marker)
        && rest
            .get(marker.len())
            .map_or(true, |&b| is_whitespace(b))
}

fn decode_utf8(bytes: &[u8]) -> Option<(char, usize)> {
    let len = match bytes.first()? {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        0xf0..=0xf7 => 4,
        _ => return None,
    };
    let slice = bytes.get(..len)?;
    let s = std::str::from_utf8(slice).ok()?;
    s.chars().next().map(|c| (c, len))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(content: &str, lang: SourceLang) -> Vec<String> {
        tokenize(content.as_bytes(), lang)
            .into_iter()
            .map(|t| t.text)
            .collect()
    }

    #[test]
    fn c_line_comment_is_stripped() {
        assert_eq!(texts("int x; // note\n", SourceLang::C), ["int", "x", ";"]);
    }

    #[test]
    fn empty_input_gives_no_tokens() {
        for lang in SourceLang::ALL {
            assert!(tokenize(b"", lang).is_empty());
        }
    }

    #[test]
    fn comment_marker_inside_string_is_not_a_comment() {
        assert_eq!(
            texts("a = \"b // c\"", SourceLang::Python),
            ["a", "=", "\"b // c\""]
        );
        assert_eq!(
            texts("a = \"# not a comment\"", SourceLang::Python),
            ["a", "=", "\"# not a comment\""]
        );
    }

    #[test]
    fn block_comments_are_stripped() {
        assert_eq!(
            texts("a /* long\n comment */ b", SourceLang::Java),
            ["a", "b"]
        );
        assert_eq!(
            texts("x\n=begin\nanything\n=end\ny", SourceLang::Ruby),
            ["x", "y"]
        );
    }

    #[test]
    fn ruby_begin_mid_line_is_not_a_comment() {
        assert_eq!(texts("a =begin_x", SourceLang::Ruby), ["a", "=", "begin_x"]);
    }

    #[test]
    fn string_literals_are_single_verbatim_tokens() {
        assert_eq!(
            texts("s = 'it\\'s'", SourceLang::Ruby),
            ["s", "=", "'it\\'s'"]
        );
        assert_eq!(
            texts("f(\"a\", 'b')", SourceLang::C),
            ["f", "(", "\"a\"", ",", "'b'", ")"]
        );
        assert_eq!(
            texts("t = `tpl ${x}`", SourceLang::JavaScript),
            ["t", "=", "`tpl ${x}`"]
        );
        assert_eq!(
            texts("d = '''one\ntwo'''", SourceLang::Python),
            ["d", "=", "'''one\ntwo'''"]
        );
    }

    #[test]
    fn operators_take_longest_match() {
        assert_eq!(texts("a<<=b", SourceLang::C), ["a", "<<=", "b"]);
        assert_eq!(texts("a===b", SourceLang::JavaScript), ["a", "===", "b"]);
        // C has no ===; it lexes as == then =
        assert_eq!(texts("a===b", SourceLang::C), ["a", "==", "=", "b"]);
        assert_eq!(texts("x<=>y", SourceLang::Ruby), ["x", "<=>", "y"]);
    }

    #[test]
    fn python_floor_div_is_an_operator_not_a_comment() {
        assert_eq!(texts("a // b", SourceLang::Python), ["a", "//", "b"]);
    }

    #[test]
    fn numbers_lex_loosely_but_sanely() {
        assert_eq!(texts("1.5e-3+2", SourceLang::C), ["1.5e-3", "+", "2"]);
        assert_eq!(texts("0xFEE+2", SourceLang::C), ["0xFEE", "+", "2"]);
        assert_eq!(texts("1..5", SourceLang::Ruby), ["1", "..", "5"]);
        assert_eq!(texts(".5+x", SourceLang::JavaScript), [".5", "+", "x"]);
    }

    #[test]
    fn php_hash_comment_and_variables() {
        assert_eq!(
            texts("$x = 1; # tail\n$y", SourceLang::Php),
            ["$x", "=", "1", ";", "$y"]
        );
    }

    #[test]
    fn undecodable_bytes_become_single_opaque_tokens() {
        let toks = tokenize(b"a \xff b", SourceLang::C);
        let texts: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["a", "\\xff", "b"]);
    }

    #[test]
    fn unicode_identifiers_hold_together() {
        assert_eq!(texts("naïve = 1", SourceLang::Python), ["naïve", "=", "1"]);
    }

    #[test]
    fn trigram_examples() {
        let toks = |v: &[&str]| -> Vec<Token> {
            v.iter().map(|s| Token::new((*s).to_string())).collect()
        };
        assert!(trigrams(&toks(&["a", "b"])).is_empty());

        let set = trigrams(&toks(&["a", "b", "c", "d"]));
        assert_eq!(set.len(), 2);
        assert!(set.contains(&("a".into(), "b".into(), "c".into())));
        assert!(set.contains(&("b".into(), "c".into(), "d".into())));

        // set semantics collapse repeats
        let set = trigrams(&toks(&["x", "x", "x", "x"]));
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn empty_source_detection() {
        assert!(is_empty_source(b"", SourceLang::C));
        assert!(is_empty_source(b"/* only a comment */", SourceLang::C));
        assert!(is_empty_source(b"\n\n  \n", SourceLang::Java));
        assert!(is_empty_source(b"# nothing here\n", SourceLang::Python));
        assert!(is_empty_source(b"=begin\nnotes\n=end\n", SourceLang::Ruby));
        assert!(!is_empty_source(b"x=1", SourceLang::Python));
    }

    #[test]
    fn unterminated_literals_run_to_eof() {
        assert_eq!(texts("a \"open", SourceLang::C), ["a", "\"open"]);
        assert_eq!(texts("a /* open", SourceLang::C), ["a"]);
    }
}
