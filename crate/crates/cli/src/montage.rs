use degrade_core::Image8;

const GAP: usize = 2;

/// Contact sheet of equally sized frames on a near-square grid with a
/// 2-pixel black gutter.
pub fn contact_sheet(frames: &[&Image8]) -> Option<Image8> {
    let first = frames.first()?;
    let (h, w) = (first.height(), first.width());
    if frames.iter().any(|f| f.height() != h || f.width() != w) {
        return None;
    }
    let cols = (frames.len() as f64).sqrt().ceil() as usize;
    let rows = frames.len().div_ceil(cols);
    let sheet_h = rows * h + (rows - 1) * GAP;
    let sheet_w = cols * w + (cols - 1) * GAP;
    Some(Image8::from_fn(sheet_h, sheet_w, |y, x| {
        let (r, oy) = (y / (h + GAP), y % (h + GAP));
        let (c, ox) = (x / (w + GAP), x % (w + GAP));
        match frames.get(r * cols + c) {
            Some(f) if oy < h && ox < w => f.pixel(oy, ox),
            _ => [0, 0, 0],
        }
    }))
}
