use std::fmt;

use thiserror::Error;

/// Whether a token came from running prose or from a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Text,
    Math,
}

/// Font channel of a math symbol. Text tokens are always `Normal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Font {
    #[default]
    Normal,
    Bold,
    Italic,
    Script,
    Fraktur,
    DoubleStruck,
    Other,
}

impl Font {
    pub const ALL: [Font; 7] =
        [Font::Normal, Font::Bold, Font::Italic, Font::Script, Font::Fraktur, Font::DoubleStruck, Font::Other];

    /// Suffix used in the corpus file (`m:x#bold`). `None` for `Normal`.
    pub fn suffix(self) -> Option<&'static str> {
        match self {
            Font::Normal => None,
            Font::Bold => Some("bold"),
            Font::Italic => Some("italic"),
            Font::Script => Some("script"),
            Font::Fraktur => Some("fraktur"),
            Font::DoubleStruck => Some("dstruck"),
            Font::Other => Some("other"),
        }
    }

    pub fn from_suffix(s: &str) -> Option<Font> {
        match s {
            "normal" => Some(Font::Normal),
            "bold" => Some(Font::Bold),
            "italic" => Some(Font::Italic),
            "script" => Some(Font::Script),
            "fraktur" => Some(Font::Fraktur),
            "dstruck" => Some(Font::DoubleStruck),
            "other" => Some(Font::Other),
            _ => None,
        }
    }

    /// Maps a MathML `mathvariant` value onto the font channel.
    pub fn from_mathvariant(v: &str) -> Font {
        match v.trim() {
            "normal" => Font::Normal,
            "bold" => Font::Bold,
            "italic" => Font::Italic,
            "script" => Font::Script,
            "fraktur" => Font::Fraktur,
            "double-struck" => Font::DoubleStruck,
            _ => Font::Other,
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(c: u8) -> Option<Font> {
        Font::ALL.get(c as usize).copied()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("token surface is empty")]
    Empty,
    #[error("token surface {0:?} contains whitespace")]
    Whitespace(String),
}

/// A typed lexical unit. Equality covers kind, surface and font, so the math
/// and text vocabularies never overlap and `x` in bold differs from `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    kind: TokenKind,
    surface: String,
    font: Font,
}

impl Token {
    pub fn text(surface: impl Into<String>) -> Result<Token, TokenError> {
        Token::new(TokenKind::Text, surface, Font::Normal)
    }

    pub fn math(surface: impl Into<String>, font: Font) -> Result<Token, TokenError> {
        Token::new(TokenKind::Math, surface, font)
    }

    pub fn new(kind: TokenKind, surface: impl Into<String>, font: Font) -> Result<Token, TokenError> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(TokenError::Empty);
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(TokenError::Whitespace(surface));
        }
        let font = match kind {
            TokenKind::Text => Font::Normal,
            TokenKind::Math => font,
        };
        Ok(Token { kind, surface, font })
    }

    pub fn kind(&self) -> TokenKind {
        self.kind
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn font(&self) -> Font {
        self.font
    }

    pub fn is_math(&self) -> bool {
        self.kind == TokenKind::Math
    }

    /// Same kind and font, different surface. Used by symbol replacement.
    pub(crate) fn with_surface(&self, surface: String) -> Token {
        debug_assert!(!surface.is_empty() && !surface.chars().any(char::is_whitespace));
        Token { kind: self.kind, surface, font: self.font }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.font.suffix()) {
            (TokenKind::Text, _) => write!(f, "t:{}", self.surface),
            (TokenKind::Math, None) => write!(f, "m:{}", self.surface),
            (TokenKind::Math, Some(s)) => write!(f, "m:{}#{}", self.surface, s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_whitespace() {
        assert_eq!(Token::text(""), Err(TokenError::Empty));
        assert!(matches!(Token::math("a b", Font::Normal), Err(TokenError::Whitespace(_))));
        assert!(matches!(Token::text("a\tb"), Err(TokenError::Whitespace(_))));
    }

    #[test]
    fn text_tokens_are_always_normal() {
        let t = Token::new(TokenKind::Text, "proof", Font::Bold).unwrap();
        assert_eq!(t.font(), Font::Normal);
    }

    #[test]
    fn kind_and_font_participate_in_equality() {
        let a_text = Token::text("a").unwrap();
        let a_math = Token::math("a", Font::Normal).unwrap();
        let a_bold = Token::math("a", Font::Bold).unwrap();
        assert_ne!(a_text, a_math);
        assert_ne!(a_math, a_bold);
        assert_eq!(a_math, Token::math("a", Font::Normal).unwrap());
    }

    #[test]
    fn font_codes_round_trip() {
        for f in Font::ALL {
            assert_eq!(Font::from_code(f.code()), Some(f));
            let suffix = f.suffix().unwrap_or("normal");
            assert_eq!(Font::from_suffix(suffix), Some(f));
        }
    }
}
