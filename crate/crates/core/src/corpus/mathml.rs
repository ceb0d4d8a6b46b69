//! Presentation MathML to flat token sequences.

use roxmltree::{Document, Node, NodeType};

use super::token::{Font, Token, TokenKind};
use super::CorpusError;

/// Content-markup elements; these are rejected rather than converted.
const CONTENT_ELEMENTS: &[&str] = &["apply", "ci", "cn", "csymbol", "bind", "bvar", "lambda", "cerror", "cbytes", "cs"];

/// Emits leaf text in document order. `mi`/`mo`/`mn` (and text under any
/// unrecognized element) become math tokens, `mtext` becomes text tokens,
/// `mspace` is dropped. The nearest `mathvariant` attribute sets the font.
///
/// A formula with no leaf content yields an empty list.
pub fn linearize_mathml(fragment: &str) -> Result<Vec<Token>, CorpusError> {
    let doc = Document::parse(fragment).map_err(|e| CorpusError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "math" {
        return Err(CorpusError::MalformedXml(format!(
            "root element is <{}>, expected <math>",
            root.tag_name().name()
        )));
    }
    let mut out = Vec::new();
    walk(root, Font::Normal, &mut out)?;
    Ok(out)
}

fn walk(node: Node<'_, '_>, inherited: Font, out: &mut Vec<Token>) -> Result<(), CorpusError> {
    let name = node.tag_name().name();
    if CONTENT_ELEMENTS.contains(&name) {
        return Err(CorpusError::MalformedXml(format!("content MathML element <{name}> is not supported")));
    }
    if name == "mspace" {
        return Ok(());
    }
    let font = node.attribute("mathvariant").map(Font::from_mathvariant).unwrap_or(inherited);
    let kind = if name == "mtext" { TokenKind::Text } else { TokenKind::Math };
    for child in node.children() {
        match child.node_type() {
            NodeType::Element => walk(child, font, out)?,
            NodeType::Text => {
                let text = child.text().unwrap_or_default();
                for piece in text.split_whitespace() {
                    // split_whitespace never yields empty or whitespace-bearing pieces
                    out.push(Token::new(kind, piece, font).expect("non-empty piece"));
                }
            }
            _ => {}
        }
    }
    Ok(())
}
