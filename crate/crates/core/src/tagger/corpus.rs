//! Tagged-corpus files: UTF-8, one `surface<TAB>tag` per line, a blank line
//! between sentences.

use std::io::{BufRead, Write};

use super::{TaggedToken, TaggerError};
use crate::tags::Tag;

pub fn read_tagged_corpus<R: BufRead>(reader: R) -> Result<Vec<Vec<TaggedToken>>, TaggerError> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (surface, tag) = line
            .split_once('\t')
            .ok_or(TaggerError::MalformedLine { line: line_no })?;
        let tag = tag.parse::<Tag>().map_err(|e| TaggerError::UnknownTag {
            tag: e.0,
            line: line_no,
        })?;
        if surface.is_empty() {
            return Err(TaggerError::MalformedLine { line: line_no });
        }
        current.push(TaggedToken {
            surface: surface.to_string(),
            tag,
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

pub fn write_tagged_corpus<W: Write>(
    mut writer: W,
    sentences: &[Vec<TaggedToken>],
) -> std::io::Result<()> {
    for sentence in sentences {
        for t in sentence {
            writeln!(writer, "{}\t{}", t.surface, t.tag)?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
