//! BookCrossing loader: semicolon-separated quoted CSV, ISO-8859-1 encoded.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use crate::data::movielens::read_latin1;
use crate::data::{Catalog, FeatureField, Interaction, InteractionLog, Vocab};
use crate::error::{CdnError, Result};

/// Kept/dropped row counts from the ratings-to-books join.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinReport {
    pub kept: usize,
    pub dropped: usize,
}

struct BookMeta {
    author: String,
    publisher: String,
    year_bucket: String,
}

fn year_bucket(raw: &str) -> String {
    match raw.trim().parse::<i32>() {
        Ok(y) if (1300..=2100).contains(&y) => format!("{}s", (y / 10) * 10),
        _ => "unknown".to_string(),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::io::Cursor<String>>> {
    let text = read_latin1(path)?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(true)
        .flexible(false)
        .from_reader(std::io::Cursor::new(text)))
}

fn csv_err(path: &Path, e: csv::Error) -> CdnError {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(0);
    CdnError::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Load BookCrossing ratings and books. Every surviving rating row becomes a
/// positive interaction; author, publisher, and publication-decade bucket
/// attach as generalization features. Rows whose ISBN is absent from the
/// books file are dropped and counted. Timestamps are the file row order
/// (the dump carries none).
pub fn load_bookcrossing(
    ratings_path: &Path,
    books_path: &Path,
) -> Result<(InteractionLog, JoinReport)> {
    let mut books: HashMap<String, BookMeta> = HashMap::new();
    let mut reader = csv_reader(books_path)?;
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(books_path, e))?;
        if record.len() < 5 {
            continue;
        }
        books.insert(
            record[0].trim().to_string(),
            BookMeta {
                author: record[2].trim().to_string(),
                publisher: record[4].trim().to_string(),
                year_bucket: year_bucket(&record[3]),
            },
        );
    }

    let mut users = Vocab::new();
    let mut items = Vocab::new();
    let mut author_vocab = Vocab::new();
    let mut publisher_vocab = Vocab::new();
    let mut year_vocab = Vocab::new();
    let mut author_bags = Vec::new();
    let mut publisher_bags = Vec::new();
    let mut year_bags = Vec::new();
    let mut interactions = Vec::new();
    let mut dropped = 0usize;

    let mut reader = csv_reader(ratings_path)?;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(ratings_path, e))?;
        if record.len() < 2 {
            return Err(CdnError::Parse {
                path: ratings_path.to_path_buf(),
                line: row + 2,
                message: format!("expected at least 2 fields, got {}", record.len()),
            });
        }
        let isbn = record[1].trim();
        let Some(meta) = books.get(isbn) else {
            dropped += 1;
            continue;
        };
        let user = users.intern(record[0].trim());
        let before = items.len();
        let item = items.intern(isbn);
        if items.len() > before {
            let nonempty = |s: &str, fallback: &str| {
                if s.is_empty() { fallback.to_string() } else { s.to_string() }
            };
            author_bags.push(vec![author_vocab.intern(&nonempty(&meta.author, "unknown"))]);
            publisher_bags.push(vec![publisher_vocab.intern(&nonempty(&meta.publisher, "unknown"))]);
            year_bags.push(vec![year_vocab.intern(&meta.year_bucket)]);
        }
        interactions.push(Interaction {
            user,
            item,
            timestamp: row as i64,
            label: 1,
        });
    }

    if interactions.is_empty() {
        return Err(CdnError::Data(format!(
            "no ratings survived the join against {books_path:?} ({dropped} dropped)"
        )));
    }

    let kept = interactions.len();
    let catalog = Arc::new(Catalog {
        users,
        items,
        gen_fields: vec![
            FeatureField {
                name: "author".into(),
                vocab: author_vocab,
                bags: author_bags,
            },
            FeatureField {
                name: "publisher".into(),
                vocab: publisher_vocab,
                bags: publisher_bags,
            },
            FeatureField {
                name: "year".into(),
                vocab: year_vocab,
                bags: year_bags,
            },
        ],
    });
    let log = InteractionLog::new(catalog, interactions)?;
    Ok((log, JoinReport { kept, dropped }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const BOOKS: &str = "\"ISBN\";\"Book-Title\";\"Book-Author\";\"Year-Of-Publication\";\"Publisher\"\n\
\"034545104X\";\"Flesh Tones\";\"M. J. Rose\";\"2002\";\"Ballantine Books\"\n\
\"0155061224\";\"Rites of Passage\";\"Judith Rae\";\"2001\";\"Heinle\"\n";

    fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn rating_rows_become_positive_interactions() {
        let dir = tempfile::tempdir().unwrap();
        let books = write_file(dir.path(), "books.csv", BOOKS);
        let ratings = write_file(
            dir.path(),
            "ratings.csv",
            "\"User-ID\";\"ISBN\";\"Book-Rating\"\n\"276725\";\"034545104X\";\"0\"\n",
        );
        let (log, report) = load_bookcrossing(&ratings, &books).unwrap();
        assert_eq!(report, JoinReport { kept: 1, dropped: 0 });
        assert_eq!(log.len(), 1);
        assert_eq!(log.interactions[0].label, 1, "zero ratings are implicit positives");
        assert_eq!(log.catalog.gen_fields.len(), 3);
        let year = log.catalog.field("year").unwrap();
        assert_eq!(year.vocab.id(year.bags[0][0]), "2000s");
    }

    #[test]
    fn unknown_isbn_rows_are_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let books = write_file(dir.path(), "books.csv", BOOKS);
        let ratings = write_file(
            dir.path(),
            "ratings.csv",
            "\"User-ID\";\"ISBN\";\"Book-Rating\"\n\
\"1\";\"034545104X\";\"5\"\n\
\"1\";\"MISSING000\";\"5\"\n\
\"2\";\"0155061224\";\"8\"\n",
        );
        let (log, report) = load_bookcrossing(&ratings, &books).unwrap();
        assert_eq!(report, JoinReport { kept: 2, dropped: 1 });
        assert_eq!(log.n_items(), 2);
    }

    #[test]
    fn zero_surviving_rows_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let books = write_file(dir.path(), "books.csv", BOOKS);
        let ratings = write_file(
            dir.path(),
            "ratings.csv",
            "\"User-ID\";\"ISBN\";\"Book-Rating\"\n\"1\";\"MISSING000\";\"5\"\n",
        );
        assert!(load_bookcrossing(&ratings, &books).is_err());
    }
}
