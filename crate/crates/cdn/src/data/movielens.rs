//! MovieLens loader: `::`-delimited ratings and movies files.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use crate::data::{Catalog, FeatureField, Interaction, InteractionLog, Vocab};
use crate::error::{CdnError, Result};

/// Read a whole file as ISO-8859-1 (each byte is its own code point).
pub(crate) fn read_latin1(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CdnError::io(path, e))?;
    Ok(bytes.iter().map(|&b| b as char).collect())
}

/// Load `ratings` (`UserID::MovieID::Rating::Timestamp`) and `movies`
/// (`MovieID::Title::Genres`). Every rating row becomes a positive
/// interaction regardless of rating value; the item vocabulary covers
/// exactly the movies that appear in the ratings file, with `|`-separated
/// genres attached as the generalization feature.
pub fn load_movielens(ratings_path: &Path, movies_path: &Path) -> Result<InteractionLog> {
    let movies_text = read_latin1(movies_path)?;
    let mut genres_by_movie: HashMap<String, Vec<String>> = HashMap::new();
    for (lineno, line) in movies_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.splitn(3, "::").collect();
        if parts.len() != 3 {
            return Err(CdnError::Parse {
                path: movies_path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected MovieID::Title::Genres, got {} fields", parts.len()),
            });
        }
        let genres: Vec<String> = parts[2]
            .split('|')
            .map(str::trim)
            .filter(|g| !g.is_empty())
            .map(str::to_string)
            .collect();
        let genres = if genres.is_empty() {
            vec!["(no genres listed)".to_string()]
        } else {
            genres
        };
        genres_by_movie.insert(parts[0].trim().to_string(), genres);
    }

    let ratings_text = read_latin1(ratings_path)?;
    let mut users = Vocab::new();
    let mut items = Vocab::new();
    let mut genre_vocab = Vocab::new();
    let mut bags: Vec<Vec<u32>> = Vec::new();
    let mut interactions = Vec::new();

    for (lineno, line) in ratings_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split("::").collect();
        if parts.len() != 4 {
            return Err(CdnError::Parse {
                path: ratings_path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected UserID::MovieID::Rating::Timestamp, got {} fields", parts.len()),
            });
        }
        let movie_id = parts[1].trim();
        let Some(genres) = genres_by_movie.get(movie_id) else {
            return Err(CdnError::Parse {
                path: ratings_path.to_path_buf(),
                line: lineno + 1,
                message: format!("movie id {movie_id:?} not present in movies file"),
            });
        };
        let timestamp: i64 = parts[3].trim().parse().map_err(|_| CdnError::Parse {
            path: ratings_path.to_path_buf(),
            line: lineno + 1,
            message: format!("bad timestamp {:?}", parts[3]),
        })?;

        let user = users.intern(parts[0].trim());
        let before = items.len();
        let item = items.intern(movie_id);
        if items.len() > before {
            bags.push(genres.iter().map(|g| genre_vocab.intern(g)).collect());
        }
        interactions.push(Interaction {
            user,
            item,
            timestamp,
            label: 1,
        });
    }

    let catalog = Arc::new(Catalog {
        users,
        items,
        gen_fields: vec![FeatureField {
            name: "genre".into(),
            vocab: genre_vocab,
            bags,
        }],
    });
    InteractionLog::new(catalog, interactions)
}
