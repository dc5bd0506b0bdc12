//! Emoji detection.
//!
//! An emoji is a codepoint with the `Emoji_Presentation` property, an
//! `Emoji` codepoint forced into emoji presentation by U+FE0F, or a regional
//! indicator pair. Modifiers, keycaps, tag sequences and ZWJ-joined
//! continuations are folded into the preceding emoji, so a family sequence
//! counts once.

use std::ops::Range;

use unicode_properties::emoji::{is_regional_indicator, is_tag_character, is_zwj};
use unicode_properties::{EmojiStatus, UnicodeEmoji};

const VS16: char = '\u{FE0F}';
const KEYCAP: char = '\u{20E3}';

fn has_emoji_presentation(c: char) -> bool {
    matches!(
        c.emoji_status(),
        EmojiStatus::EmojiPresentation
            | EmojiStatus::EmojiPresentationAndModifierBase
            | EmojiStatus::EmojiPresentationAndEmojiComponent
            | EmojiStatus::EmojiPresentationAndModifierAndEmojiComponent
    )
}

fn is_modifier(c: char) -> bool {
    ('\u{1F3FB}'..='\u{1F3FF}').contains(&c)
}

/// Byte ranges of every emoji in `text`, in order.
pub fn find_emoji(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| chars.get(i).map(|(o, _)| *o).unwrap_or(text.len());
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        let next = chars.get(i + 1).map(|(_, c)| *c);

        if is_regional_indicator(c) {
            let len = if next.is_some_and(is_regional_indicator) { 2 } else { 1 };
            out.push(chars[i].0..end_of(i + len));
            i += len;
            continue;
        }

        let starts = has_emoji_presentation(c) || (c.is_emoji_char() && next == Some(VS16));
        if !starts {
            i += 1;
            continue;
        }

        let start = chars[i].0;
        let mut j = i + 1;
        loop {
            while let Some(&(_, c)) = chars.get(j) {
                if c == VS16 || c == KEYCAP || is_modifier(c) || is_tag_character(c) {
                    j += 1;
                } else {
                    break;
                }
            }
            let joined = chars.get(j).is_some_and(|(_, c)| is_zwj(*c))
                && chars.get(j + 1).is_some_and(|(_, c)| c.is_emoji_char());
            if joined {
                j += 2;
            } else {
                break;
            }
        }
        out.push(start..end_of(j));
        i = j;
    }
    out
}
