use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::mesh::Label;

/// Flat-color RGB guidance image.
pub type SemanticImage = Grid<[u8; 3]>;

/// Binary target mask per label id.
pub type MaskSet = BTreeMap<u32, Mask>;

fn channel_distance(a: [u8; 3], b: [u8; 3]) -> u8 {
    (0..3).map(|c| a[c].abs_diff(b[c])).max().unwrap_or(0)
}

/// Splits `img` into one mask per label by color: a pixel belongs to a label
/// when every channel is within `tolerance` of the label color. Pixels that
/// match no label belong to no mask.
pub fn separate_masks(img: &SemanticImage, labels: &BTreeMap<u32, Label>, tolerance: u8) -> Result<MaskSet> {
    let entries: Vec<(u32, [u8; 3])> = labels.iter().map(|(&id, l)| (id, l.color)).collect();
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            if (channel_distance(a.1, b.1) as u16) <= 2 * tolerance as u16 {
                return Err(Error::AmbiguousColors { a: a.1, b: b.1, tolerance });
            }
        }
    }
    Ok(entries
        .iter()
        .map(|&(id, color)| (id, img.map(|&px| channel_distance(px, color) <= tolerance)))
        .collect())
}
