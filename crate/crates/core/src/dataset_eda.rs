//! Exploratory statistics for a class-folder image dataset.
//!
//! Expected layout: `root/<split>/<class>/*.{jpg,jpeg,png}`. Scans count
//! images per split and class; histograms bin each pixel's luma
//! (integer Rec.601 weights) into 256 bins, 0 = darkest.

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const DEFAULT_CLASSES: [&str; 3] = ["Fresh", "Half-Fresh", "Spoiled"];
pub const DEFAULT_SPLITS: [&str; 2] = ["train", "test"];
pub const IMAGE_EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];
pub const NUM_BINS: usize = 256;

#[derive(Debug, Error)]
pub enum EdaError {
    #[error("dataset root '{}' does not exist or is not a directory", .0.display())]
    MissingRoot(PathBuf),
    #[error("I/O error at '{}': {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no images counted")]
    Empty,
    #[error("no histograms to report")]
    NoHistograms,
    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot rendering failed: {0}")]
    Plot(#[from] image::ImageError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> EdaError + '_ {
    move |source| EdaError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A file that could not be read or decoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileIssue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFiles {
    pub class: String,
    pub count: u64,
    /// Folder was not found under the split.
    pub missing: bool,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub name: String,
    pub missing: bool,
    pub classes: Vec<ClassFiles>,
    pub unknown_dirs: Vec<String>,
}

impl SplitManifest {
    pub fn total(&self) -> u64 {
        self.classes.iter().map(|c| c.count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: String,
    pub splits: Vec<SplitManifest>,
    /// Observed image sizes as `"WxH"` → image count.
    pub dimensions: BTreeMap<String, u64>,
    pub issues: Vec<FileIssue>,
}

impl DatasetManifest {
    pub fn split(&self, name: &str) -> Option<&SplitManifest> {
        self.splits.iter().find(|s| s.name == name)
    }

    /// Per-class totals pooled over all splits, in class order.
    pub fn pooled_counts(&self) -> Vec<(String, u64)> {
        let mut out: Vec<(String, u64)> = Vec::new();
        for split in &self.splits {
            for class in &split.classes {
                match out.iter_mut().find(|(name, _)| *name == class.class) {
                    Some((_, n)) => *n += class.count,
                    None => out.push((class.class.clone(), class.count)),
                }
            }
        }
        out
    }

    /// Image paths of one class pooled over all splits.
    pub fn class_files(&self, class: &str) -> Vec<PathBuf> {
        self.splits
            .iter()
            .flat_map(|s| s.classes.iter())
            .filter(|c| c.class == class)
            .flat_map(|c| c.files.iter().cloned())
            .collect()
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, EdaError> {
    let mut entries = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err(dir))?;
    entries.sort();
    Ok(entries)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Class folders match case-insensitively; everything is sorted so repeated
/// scans of an unchanged tree give identical manifests.
pub fn scan_dataset(root: &Path, classes: &[String], splits: &[String]) -> Result<DatasetManifest, EdaError> {
    if !root.is_dir() {
        return Err(EdaError::MissingRoot(root.to_path_buf()));
    }
    let mut manifest = DatasetManifest {
        root: root.display().to_string(),
        splits: Vec::new(),
        dimensions: BTreeMap::new(),
        issues: Vec::new(),
    };

    for split in splits {
        let split_dir = root.join(split);
        let missing = !split_dir.is_dir();
        let subdirs: Vec<PathBuf> = if missing {
            Vec::new()
        } else {
            sorted_entries(&split_dir)?.into_iter().filter(|p| p.is_dir()).collect()
        };

        let mut class_entries = Vec::with_capacity(classes.len());
        for class in classes {
            let dir = subdirs.iter().find(|d| file_name(d).eq_ignore_ascii_case(class));
            let files: Vec<PathBuf> = match dir {
                Some(dir) => sorted_entries(dir)?
                    .into_iter()
                    .filter(|p| p.is_file() && is_image(p))
                    .collect(),
                None => Vec::new(),
            };
            class_entries.push(ClassFiles {
                class: class.clone(),
                count: files.len() as u64,
                missing: dir.is_none(),
                files,
            });
        }
        let unknown_dirs = subdirs
            .iter()
            .map(|d| file_name(d))
            .filter(|name| !classes.iter().any(|c| c.eq_ignore_ascii_case(name)))
            .collect();

        manifest.splits.push(SplitManifest {
            name: split.clone(),
            missing,
            classes: class_entries,
            unknown_dirs,
        });
    }

    let all_files: Vec<&PathBuf> = manifest
        .splits
        .iter()
        .flat_map(|s| s.classes.iter())
        .flat_map(|c| c.files.iter())
        .collect();
    let probed: Vec<Result<(u32, u32), FileIssue>> = all_files
        .par_iter()
        .map(|path| {
            image::image_dimensions(path).map_err(|e| FileIssue {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect();
    for result in probed {
        match result {
            Ok((w, h)) => *manifest.dimensions.entry(format!("{w}x{h}")).or_default() += 1,
            Err(issue) => manifest.issues.push(issue),
        }
    }
    Ok(manifest)
}

/// Fraction of images in each class. Fractions sum to 1.
pub fn class_balance(counts: &[(String, u64)]) -> Result<Vec<(String, f64)>, EdaError> {
    let total: u64 = counts.iter().map(|(_, n)| n).sum();
    if total == 0 {
        return Err(EdaError::Empty);
    }
    Ok(counts
        .iter()
        .map(|(name, n)| (name.clone(), *n as f64 / total as f64))
        .collect())
}

/// Integer Rec.601 luma, rounded half away from zero.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    // weights sum to 1000, so the result is at most 255
    ((weighted + 500) / 1000) as u8
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelHistogram {
    pub class: String,
    pub bins: Vec<u64>,
    pub images_counted: u64,
    pub pixels_counted: u64,
}

impl PixelHistogram {
    pub fn empty(class: &str) -> Self {
        Self {
            class: class.to_string(),
            bins: vec![0; NUM_BINS],
            images_counted: 0,
            pixels_counted: 0,
        }
    }

    pub fn add_image(&mut self, image: &RgbImage) {
        for Rgb([r, g, b]) in image.pixels() {
            self.bins[luma(*r, *g, *b) as usize] += 1;
        }
        self.images_counted += 1;
        self.pixels_counted += u64::from(image.width()) * u64::from(image.height());
    }

    pub fn merge(&mut self, other: &PixelHistogram) {
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.images_counted += other.images_counted;
        self.pixels_counted += other.pixels_counted;
    }

    pub fn mean(&self) -> f64 {
        if self.pixels_counted == 0 {
            return 0.0;
        }
        let weighted: f64 = self.bins.iter().enumerate().map(|(v, &n)| v as f64 * n as f64).sum();
        weighted / self.pixels_counted as f64
    }

    /// Share of pixels with luma strictly above 128.
    pub fn mass_above_128(&self) -> f64 {
        if self.pixels_counted == 0 {
            return 0.0;
        }
        let above: u64 = self.bins[129..].iter().sum();
        above as f64 / self.pixels_counted as f64
    }
}

/// Histogram of every decodable image; undecodable files are collected.
pub fn pixel_histogram(class: &str, paths: &[PathBuf]) -> (PixelHistogram, Vec<FileIssue>) {
    let per_file: Vec<Result<PixelHistogram, FileIssue>> = paths
        .par_iter()
        .map(|path| {
            let img = image::open(path).map_err(|e| FileIssue {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let mut h = PixelHistogram::empty(class);
            h.add_image(&img.to_rgb8());
            Ok(h)
        })
        .collect();
    let mut hist = PixelHistogram::empty(class);
    let mut issues = Vec::new();
    for result in per_file {
        match result {
            Ok(h) => hist.merge(&h),
            Err(issue) => issues.push(issue),
        }
    }
    (hist, issues)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    pub images: u64,
    pub pixels: u64,
    pub mean_pixel_value: f64,
    pub mass_above_128: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub classes: Vec<ClassSummary>,
}

pub fn histogram_report(histograms: &[PixelHistogram]) -> Result<HistogramReport, EdaError> {
    if histograms.is_empty() {
        return Err(EdaError::NoHistograms);
    }
    Ok(HistogramReport {
        classes: histograms
            .iter()
            .map(|h| ClassSummary {
                class: h.class.clone(),
                images: h.images_counted,
                pixels: h.pixels_counted,
                mean_pixel_value: h.mean(),
                mass_above_128: h.mass_above_128(),
            })
            .collect(),
    })
}

/// `class,bin,count` rows, 256 per class.
pub fn write_histogram_csv<W: io::Write>(histograms: &[PixelHistogram], out: W) -> Result<(), EdaError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["class", "bin", "count"])?;
    for h in histograms {
        for (bin, count) in h.bins.iter().enumerate() {
            writer.write_record([h.class.as_str(), &bin.to_string(), &count.to_string()])?;
        }
    }
    writer.flush().map_err(|e| EdaError::Csv(e.into()))?;
    Ok(())
}

const PLOT_HEIGHT: u32 = 200;
const PLOT_MARGIN: u32 = 10;

/// Bar chart of a histogram, one pixel column per bin, bars shaded by bin value.
pub fn render_histogram(hist: &PixelHistogram) -> RgbImage {
    let width = NUM_BINS as u32 * 2 + 2 * PLOT_MARGIN;
    let height = PLOT_HEIGHT + 2 * PLOT_MARGIN;
    let mut img = RgbImage::from_pixel(width, height, Rgb([245, 245, 245]));
    let peak = hist.bins.iter().copied().max().unwrap_or(0).max(1);
    for (bin, &count) in hist.bins.iter().enumerate() {
        let bar = ((count as f64 / peak as f64) * f64::from(PLOT_HEIGHT)).round() as u32;
        let shade = bin as u8;
        let colour = Rgb([shade, shade / 2, shade / 2 + 40]);
        for dx in 0..2 {
            let x = PLOT_MARGIN + bin as u32 * 2 + dx;
            for y in 0..bar {
                img.put_pixel(x, PLOT_MARGIN + PLOT_HEIGHT - 1 - y, colour);
            }
        }
    }
    // baseline
    for x in PLOT_MARGIN..width - PLOT_MARGIN {
        img.put_pixel(x, PLOT_MARGIN + PLOT_HEIGHT, Rgb([0, 0, 0]));
    }
    img
}

/// Everything an EDA run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaOutput {
    pub manifest: DatasetManifest,
    pub balance: Vec<(String, f64)>,
    pub report: HistogramReport,
    pub histograms: Vec<PixelHistogram>,
}

/// Scan, histogram each class (all splits pooled) and summarise.
pub fn run_eda(root: &Path, classes: &[String], splits: &[String]) -> Result<EdaOutput, EdaError> {
    let mut manifest = scan_dataset(root, classes, splits)?;
    let balance = class_balance(&manifest.pooled_counts())?;
    let mut histograms = Vec::with_capacity(classes.len());
    for class in classes {
        let (hist, issues) = pixel_histogram(class, &manifest.class_files(class));
        for issue in issues {
            if !manifest.issues.contains(&issue) {
                manifest.issues.push(issue);
            }
        }
        histograms.push(hist);
    }
    let report = histogram_report(&histograms)?;
    Ok(EdaOutput {
        manifest,
        balance,
        report,
        histograms,
    })
}

/// Writes `manifest.json`, `histogram.csv`, `summary.json` and, with `plots`,
/// one `hist_<class>.png` per class. Returns the written paths.
pub fn write_eda_outputs(output: &EdaOutput, out_dir: &Path, plots: bool) -> Result<Vec<PathBuf>, EdaError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();

    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&output.manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(io_err(&manifest_path))?;
    written.push(manifest_path);

    let csv_path = out_dir.join("histogram.csv");
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_histogram_csv(&output.histograms, io::BufWriter::new(file))?;
    written.push(csv_path);

    let summary_path = out_dir.join("summary.json");
    let summary = serde_json::json!({ "balance": output.balance, "report": output.report });
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(io_err(&summary_path))?;
    written.push(summary_path);

    if plots {
        for hist in &output.histograms {
            let safe: String = hist
                .class
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            let path = out_dir.join(format!("hist_{safe}.png"));
            render_histogram(hist).save(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}
