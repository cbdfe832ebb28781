//! Token-level source rewriting that keeps user formatting intact. Used when
//! metamodel renames must be reflected in view and rule sources.

use super::lexer::{tokenize, TemplateChunk, Tok, Token};
use super::QueryError;

fn collect<'t>(toks: &'t [Token], out: &mut Vec<&'t Token>) {
    for t in toks {
        out.push(t);
        if let Tok::Template(chunks) = &t.tok {
            for c in chunks {
                if let TemplateChunk::Code(inner) = c {
                    collect(inner, out);
                }
            }
        }
    }
}

fn splice(src: &str, mut edits: Vec<(usize, usize, String)>) -> String {
    edits.sort_by_key(|e| e.0);
    let mut out = String::with_capacity(src.len());
    let mut at = 0;
    for (start, end, text) in edits {
        out.push_str(&src[at..start]);
        out.push_str(&text);
        at = end;
    }
    out.push_str(&src[at..]);
    out
}

/// Replaces every `$old` navigation step by `$new`.
pub fn rename_member(src: &str, old: &str, new: &str) -> Result<String, QueryError> {
    let toks = tokenize(src)?;
    let mut all = Vec::new();
    collect(&toks, &mut all);
    let edits = all
        .into_iter()
        .filter(|t| matches!(&t.tok, Tok::Dollar(n) if n == old))
        .map(|t| (t.span.start, t.span.end, format!("${new}")))
        .collect();
    Ok(splice(src, edits))
}

/// Replaces string literals equal to `old` and the class named in a
/// `context` clause.
pub fn rename_class(src: &str, old: &str, new: &str) -> Result<String, QueryError> {
    let toks = tokenize(src)?;
    let mut edits = Vec::new();
    if let [first, second, ..] = toks.as_slice() {
        if matches!(&first.tok, Tok::Ident(w) if w == "context") && matches!(&second.tok, Tok::Ident(c) if c == old) {
            edits.push((second.span.start, second.span.end, new.to_string()));
        }
    }
    let mut all = Vec::new();
    collect(&toks, &mut all);
    for t in all {
        if matches!(&t.tok, Tok::Str(s) if s == old) {
            let quote = &src[t.span.start..t.span.start + 1];
            edits.push((t.span.start, t.span.end, format!("{quote}{new}{quote}")));
        }
    }
    Ok(splice(src, edits))
}
