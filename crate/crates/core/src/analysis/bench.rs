use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use super::{compare, ComparisonRecord};
use crate::error::{Error, Result};
use crate::imageio::{load_image_path, ImageFormat};
use crate::search::BisectionConfig;

/// All `*.pgm`, `*.pnm` and `*.png` files under `root`, sorted by path.
pub fn discover_images(root: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| {
            Error::Io(
                e.into_io_error()
                    .unwrap_or_else(|| std::io::Error::other("directory walk failed")),
            )
        })?;
        if entry.file_type().is_file() && ImageFormat::from_path(entry.path()).is_some() {
            paths.push(entry.into_path());
        }
    }
    paths.sort();
    Ok(paths)
}

/// Path relative to `root` with `/` separators.
pub fn image_id(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

#[derive(Debug)]
pub struct BenchItem {
    pub image_id: String,
    pub outcome: Result<ComparisonRecord>,
}

/// Compare every image; results keep the order of `paths`.
pub fn run_bench(root: &Path, paths: &[PathBuf], cfg: &BisectionConfig) -> Vec<BenchItem> {
    paths
        .par_iter()
        .map(|path| {
            let image_id = image_id(root, path);
            let outcome = load_image_path(path).and_then(|img| compare(&image_id, &img, cfg));
            BenchItem { image_id, outcome }
        })
        .collect()
}

/// Two-column `image,category` CSV. A header row is allowed when its first
/// field is literally `image`.
pub fn load_category_map(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)?;
    let mut map = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        if row.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "category map row {} must have 2 fields",
                i + 1
            )));
        }
        if i == 0 && &row[0] == "image" {
            continue;
        }
        map.insert(row[0].to_owned(), row[1].to_owned());
    }
    Ok(map)
}
