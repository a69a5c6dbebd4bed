use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CategoryBag, Dataset, DatasetError, Rating, Review, UserId, Venue};

#[derive(Serialize, Deserialize)]
struct VenueRecord {
    id: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    categories: Vec<String>,
    #[serde(default)]
    reviews: Vec<Review>,
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads `user<TAB>venue<TAB>value` lines. `#` lines and blank lines are skipped.
pub fn load_ratings(path: &Path) -> Result<Vec<Rating>, DatasetError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        let user = UserId::new(fields[0]).map_err(|_| parse_err(path, lineno, "empty user id"))?;
        if fields[1].is_empty() {
            return Err(parse_err(path, lineno, "empty venue id"));
        }
        let value: i64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad rating value {:?}", fields[2])))?;
        if !(1..=5).contains(&value) {
            return Err(parse_err(
                path,
                lineno,
                format!("rating {value} is outside 1..=5"),
            ));
        }
        out.push(Rating {
            user,
            venue: fields[1].to_string(),
            value: value as u8,
        });
    }
    Ok(out)
}

/// Reads one JSON venue object per line.
pub fn load_venues(path: &Path) -> Result<Vec<Venue>, DatasetError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: VenueRecord =
            serde_json::from_str(line).map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let venue = Venue {
            id: rec.id,
            latitude: rec.lat,
            longitude: rec.lon,
            categories: rec.categories.into_iter().collect::<CategoryBag>(),
            reviews: rec.reviews,
        };
        venue
            .validate()
            .map_err(|e| parse_err(path, lineno, e.to_string()))?;
        out.push(venue);
    }
    Ok(out)
}

pub fn load_dataset(ratings_path: &Path, venues_path: &Path) -> Result<Dataset, DatasetError> {
    let venues = load_venues(venues_path)?;
    let ratings = load_ratings(ratings_path)?;
    Dataset::new(venues, ratings)
}

fn write(path: &Path, contents: &[u8]) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents).map_err(io)
}

pub fn save_ratings(path: &Path, ratings: &[Rating]) -> Result<(), DatasetError> {
    let mut buf = String::new();
    for r in ratings {
        buf.push_str(&format!("{}\t{}\t{}\n", r.user, r.venue, r.value));
    }
    write(path, buf.as_bytes())
}

pub fn save_venues(path: &Path, venues: &[Venue]) -> Result<(), DatasetError> {
    let mut buf = String::new();
    for v in venues {
        let rec = VenueRecord {
            id: v.id.clone(),
            lat: v.latitude,
            lon: v.longitude,
            categories: v.categories.to_labels(),
            reviews: v.reviews.clone(),
        };
        buf.push_str(&serde_json::to_string(&rec).expect("venue record serializes"));
        buf.push('\n');
    }
    write(path, buf.as_bytes())
}
