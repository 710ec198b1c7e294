//! Tile-binned, front-to-back, parallel full-frame rendering.
//!
//! Splats are projected once, sorted by camera depth (ties keep input
//! order) and binned into square tiles by the bounding box of their
//! `support_sigma`-σ ellipse. Each pixel then blends, in that global depth
//! order, exactly the splats whose box overlaps its unit square. Tiles only
//! narrow the candidate list, so the image does not depend on tile size.

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::blend::{blend_pixel, BlendMode, BlendParams, PreparedSplat, DEFAULT_EPSILON};
use crate::scene::{project_splat, Camera, Cull, Splat3D};
use crate::{Error, Result};

/// Linear-light RGB image plus a per-pixel residual transmittance channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Framebuffer {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub rgb: Vec<[f64; 3]>,
    pub residual: Vec<f64>,
}

impl Framebuffer {
    pub fn new(width: usize, height: usize, fill: [f64; 3]) -> Self {
        Framebuffer { width, height, rgb: vec![fill; width * height], residual: vec![1.0; width * height] }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.rgb[y * self.width + x]
    }

    pub fn residual_at(&self, x: usize, y: usize) -> f64 {
        self.residual[y * self.width + x]
    }

    /// Averages `factor × factor` blocks; dimensions must divide evenly.
    pub fn box_downsample(&self, factor: usize) -> Result<Framebuffer> {
        if factor == 0 || self.width % factor != 0 || self.height % factor != 0 {
            return Err(Error::InvalidArgument(format!(
                "{}x{} is not divisible into {factor}x{factor} blocks",
                self.width, self.height
            )));
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = Framebuffer::new(w, h, [0.0; 3]);
        let n = (factor * factor) as f64;
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0.0; 3];
                let mut res = 0.0;
                for dy in 0..factor {
                    for dx in 0..factor {
                        let i = (y * factor + dy) * self.width + x * factor + dx;
                        for c in 0..3 {
                            acc[c] += self.rgb[i][c];
                        }
                        res += self.residual[i];
                    }
                }
                out.rgb[y * w + x] = acc.map(|v| v / n);
                out.residual[y * w + x] = res / n;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub mode: BlendMode,
    pub epsilon: f64,
    pub tile_size: u32,
    pub background: [f64; 3],
    /// Screen-space diagonal dilation; `None` uses the mode's default.
    pub lowpass: Option<f64>,
    /// Support cutoff in standard deviations used for binning.
    pub support_sigma: f64,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
    /// Sub-rectangle of the image to render; `None` renders all of it.
    pub viewport: Option<Viewport>,
}

/// Pixel rectangle `[x0, x0 + width) × [y0, y0 + height)` of the full image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Viewport {
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
}

impl Viewport {
    pub fn full(width: u32, height: u32) -> Self {
        Viewport { x0: 0, y0: 0, width, height }
    }
}

impl RenderOptions {
    pub fn new(mode: BlendMode) -> Self {
        RenderOptions {
            mode,
            epsilon: DEFAULT_EPSILON,
            tile_size: 16,
            background: [0.0; 3],
            lowpass: None,
            support_sigma: 3.0,
            threads: None,
            viewport: None,
        }
    }

    pub fn lowpass(&self) -> f64 {
        self.lowpass.unwrap_or_else(|| self.mode.default_lowpass())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderStats {
    pub splats: usize,
    pub visible: usize,
    pub culled_near: usize,
    pub culled_non_finite: usize,
    pub culled_degenerate: usize,
    /// Total (tile, splat) pairs after binning.
    pub tile_entries: usize,
}

impl RenderStats {
    /// Culls caused by numerical problems rather than geometry.
    pub fn numerical_culls(&self) -> usize {
        self.culled_non_finite + self.culled_degenerate
    }
}

#[derive(Debug, Clone)]
pub struct Render {
    pub image: Framebuffer,
    pub stats: RenderStats,
}

/// Axis-aligned screen box of a splat's support ellipse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub min: Vector2<f64>,
    pub max: Vector2<f64>,
}

impl Footprint {
    /// Box of the `k`σ ellipse: `mu2d ± k·(√Σxx, √Σyy)`.
    pub fn of(splat: &PreparedSplat, k: f64) -> Footprint {
        let c = &splat.splat.cov2d;
        let half = Vector2::new(c.xx.sqrt(), c.yy.sqrt()) * k;
        Footprint { min: splat.splat.mu2d - half, max: splat.splat.mu2d + half }
    }

    /// Open overlap with the axis-aligned box `[lo, hi]`.
    #[inline]
    pub fn overlaps(&self, lo: Vector2<f64>, hi: Vector2<f64>) -> bool {
        self.min.x < hi.x && self.max.x > lo.x && self.min.y < hi.y && self.max.y > lo.y
    }
}

/// Tile grid over an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGrid {
    pub tile_size: u32,
    pub tiles_x: u32,
    pub tiles_y: u32,
    pub width: u32,
    pub height: u32,
}

impl TileGrid {
    pub fn new(width: u32, height: u32, tile_size: u32) -> Result<Self> {
        if tile_size == 0 {
            return Err(Error::InvalidArgument("tile size must be positive".into()));
        }
        Ok(TileGrid {
            tile_size,
            tiles_x: width.div_ceil(tile_size),
            tiles_y: height.div_ceil(tile_size),
            width,
            height,
        })
    }

    pub fn len(&self) -> usize {
        (self.tiles_x * self.tiles_y) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inclusive tile index range overlapped by `[lo, hi]` on one axis.
    fn span(&self, lo: f64, hi: f64, tiles: u32) -> Option<(u32, u32)> {
        let t = self.tile_size as f64;
        let first = (lo / t).floor().max(0.0);
        let last = ((hi / t).ceil() - 1.0).min(tiles as f64 - 1.0);
        if !(first <= last) {
            return None;
        }
        Some((first as u32, last as u32))
    }

    /// Pixel rectangle `(x0, y0, x1, y1)` (exclusive end) of tile `index`.
    pub fn bounds(&self, index: usize) -> (u32, u32, u32, u32) {
        let tx = index as u32 % self.tiles_x;
        let ty = index as u32 / self.tiles_x;
        let x0 = tx * self.tile_size;
        let y0 = ty * self.tile_size;
        (x0, y0, (x0 + self.tile_size).min(self.width), (y0 + self.tile_size).min(self.height))
    }
}

/// Front-to-back order: ascending depth, ties broken by input position.
pub fn depth_order(splats: &[PreparedSplat]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..splats.len()).collect();
    order.sort_by(|&a, &b| splats[a].splat.depth.total_cmp(&splats[b].splat.depth));
    order
}

/// Assigns every splat to each tile its support box overlaps. Lists are in
/// front-to-back order.
pub fn bin_splats(splats: &[PreparedSplat], footprints: &[Footprint], grid: &TileGrid) -> Vec<Vec<u32>> {
    let mut bins = vec![Vec::new(); grid.len()];
    for i in depth_order(splats) {
        let fp = &footprints[i];
        let Some((x0, x1)) = grid.span(fp.min.x, fp.max.x, grid.tiles_x) else { continue };
        let Some((y0, y1)) = grid.span(fp.min.y, fp.max.y, grid.tiles_y) else { continue };
        for ty in y0..=y1 {
            for tx in x0..=x1 {
                bins[(ty * grid.tiles_x + tx) as usize].push(i as u32);
            }
        }
    }
    bins
}

/// Projects and prepares every splat, returning survivors and statistics.
pub fn prepare_scene(scene: &[Splat3D], cam: &Camera, lowpass: f64) -> (Vec<PreparedSplat>, RenderStats) {
    let results: Vec<Result<PreparedSplat, Cull>> = scene
        .par_iter()
        .map(|s| project_splat(s, cam, lowpass).and_then(|p| PreparedSplat::new(p).map_err(|_| Cull::Degenerate)))
        .collect();
    let mut stats = RenderStats { splats: scene.len(), ..Default::default() };
    let mut prepared = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(p) => prepared.push(p),
            Err(Cull::NearPlane) => stats.culled_near += 1,
            Err(Cull::NonFinite) => stats.culled_non_finite += 1,
            Err(Cull::Degenerate) => stats.culled_degenerate += 1,
        }
    }
    stats.visible = prepared.len();
    (prepared, stats)
}

/// Renders already-prepared splats over `view`; see [`render`].
pub fn render_prepared(splats: &[PreparedSplat], view: Viewport, opts: &RenderOptions) -> Result<(Framebuffer, usize)> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {} outside (0, 1)", opts.epsilon)));
    }
    if view.width == 0 || view.height == 0 {
        return Err(Error::InvalidArgument(format!("empty viewport {}x{}", view.width, view.height)));
    }
    let (width, height) = (view.width, view.height);
    let origin = Vector2::new(view.x0 as f64, view.y0 as f64);
    let grid = TileGrid::new(width, height, opts.tile_size)?;
    // binning works in viewport-local pixel coordinates
    let footprints: Vec<Footprint> = splats
        .iter()
        .map(|s| {
            let fp = Footprint::of(s, opts.support_sigma);
            Footprint { min: fp.min - origin, max: fp.max - origin }
        })
        .collect();
    let bins = bin_splats(splats, &footprints, &grid);
    let entries = bins.iter().map(Vec::len).sum();
    let params = BlendParams { epsilon: opts.epsilon, background: opts.background };

    let shade_tile = |index: usize| -> Vec<(f64, [f64; 3])> {
        let (x0, y0, x1, y1) = grid.bounds(index);
        let bin = &bins[index];
        let mut list: Vec<&PreparedSplat> = Vec::with_capacity(bin.len());
        let mut out = Vec::with_capacity(((x1 - x0) * (y1 - y0)) as usize);
        for y in y0..y1 {
            for x in x0..x1 {
                let lo = Vector2::new(x as f64, y as f64);
                let hi = lo + Vector2::new(1.0, 1.0);
                list.clear();
                list.extend(bin.iter().map(|&i| i as usize).filter(|&i| footprints[i].overlaps(lo, hi)).map(|i| &splats[i]));
                let r = blend_pixel(&list, origin + lo + Vector2::new(0.5, 0.5), opts.mode, &params);
                out.push((r.residual, r.color));
            }
        }
        out
    };

    let run = || (0..grid.len()).into_par_iter().map(shade_tile).collect::<Vec<_>>();
    let tiles = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut fb = Framebuffer::new(width as usize, height as usize, [0.0; 3]);
    for (index, tile) in tiles.into_iter().enumerate() {
        let (x0, y0, x1, _) = grid.bounds(index);
        let tw = (x1 - x0) as usize;
        for (k, (res, rgb)) in tile.into_iter().enumerate() {
            let (x, y) = (x0 as usize + k % tw, y0 as usize + k / tw);
            let i = y * fb.width + x;
            fb.rgb[i] = rgb;
            fb.residual[i] = res;
        }
    }
    Ok((fb, entries))
}

/// Renders `scene` through `cam` with the options' blending mode.
///
/// Output is a pure function of the inputs: thread count and tile size do
/// not change a single bit.
pub fn render(scene: &[Splat3D], cam: &Camera, opts: &RenderOptions) -> Result<Render> {
    let view = opts.viewport.unwrap_or(Viewport::full(cam.width, cam.height));
    if view.x0.checked_add(view.width).is_none_or(|x| x > cam.width)
        || view.y0.checked_add(view.height).is_none_or(|y| y > cam.height)
    {
        return Err(Error::InvalidArgument(format!(
            "viewport {}x{}+{}+{} exceeds the {}x{} image",
            view.width, view.height, view.x0, view.y0, cam.width, cam.height
        )));
    }
    let (prepared, mut stats) = prepare_scene(scene, cam, opts.lowpass());
    let (image, entries) = render_prepared(&prepared, view, opts)?;
    stats.tile_entries = entries;
    Ok(Render { image, stats })
}
