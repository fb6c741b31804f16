use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A1-style cell address local to one sheet. Columns and rows are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddress {
    // row first so that the derived ordering is row-major
    row: u32,
    column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid cell address `{0}`")]
pub struct AddressError(pub String);

impl CellAddress {
    /// Largest column accepted (`XFD`).
    pub const MAX_COLUMN: u32 = 16_384;
    pub const MAX_ROW: u32 = 1_048_576;

    pub fn new(column: u32, row: u32) -> Result<Self, AddressError> {
        if column == 0 || row == 0 || column > Self::MAX_COLUMN || row > Self::MAX_ROW {
            return Err(AddressError(format!("column {column}, row {row}")));
        }
        Ok(Self { row, column })
    }

    pub fn column(&self) -> u32 {
        self.column
    }

    pub fn row(&self) -> u32 {
        self.row
    }

    /// Returns the address shifted by the given number of rows and columns,
    /// or `None` when the result would leave the grid.
    pub fn offset(&self, columns: i64, rows: i64) -> Option<Self> {
        let column = i64::from(self.column) + columns;
        let row = i64::from(self.row) + rows;
        Self::new(u32::try_from(column).ok()?, u32::try_from(row).ok()?).ok()
    }
}

pub fn column_to_letters(mut column: u32) -> String {
    let mut letters = Vec::new();
    while column > 0 {
        let rem = (column - 1) % 26;
        letters.push(b'A' + rem as u8);
        column = (column - 1) / 26;
    }
    letters.reverse();
    String::from_utf8(letters).expect("ascii")
}

pub fn letters_to_column(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    let mut column: u32 = 0;
    for b in letters.bytes() {
        let b = b.to_ascii_uppercase();
        if !b.is_ascii_uppercase() {
            return None;
        }
        column = column * 26 + u32::from(b - b'A' + 1);
    }
    Some(column)
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", column_to_letters(self.column), self.row)
    }
}

impl FromStr for CellAddress {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AddressError(s.to_string());
        let split = s.find(|c: char| c.is_ascii_digit()).ok_or_else(err)?;
        let (letters, digits) = s.split_at(split);
        if digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let column = letters_to_column(letters).ok_or_else(err)?;
        let row: u32 = digits.parse().map_err(|_| err())?;
        Self::new(column, row).map_err(|_| err())
    }
}

impl Serialize for CellAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CellAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rectangular range with normalized corners (top-left, bottom-right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellRange {
    start: CellAddress,
    end: CellAddress,
}

impl CellRange {
    pub fn new(a: CellAddress, b: CellAddress) -> Self {
        let start = CellAddress {
            row: a.row.min(b.row),
            column: a.column.min(b.column),
        };
        let end = CellAddress {
            row: a.row.max(b.row),
            column: a.column.max(b.column),
        };
        Self { start, end }
    }

    pub fn single(addr: CellAddress) -> Self {
        Self { start: addr, end: addr }
    }

    pub fn start(&self) -> CellAddress {
        self.start
    }

    pub fn end(&self) -> CellAddress {
        self.end
    }

    pub fn width(&self) -> u32 {
        self.end.column - self.start.column + 1
    }

    pub fn height(&self) -> u32 {
        self.end.row - self.start.row + 1
    }

    pub fn len(&self) -> usize {
        self.width() as usize * self.height() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, addr: CellAddress) -> bool {
        (self.start.row..=self.end.row).contains(&addr.row)
            && (self.start.column..=self.end.column).contains(&addr.column)
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellAddress> + '_ {
        let (c0, c1) = (self.start.column, self.end.column);
        (self.start.row..=self.end.row)
            .flat_map(move |row| (c0..=c1).map(move |column| CellAddress { row, column }))
    }

    pub fn offset(&self, columns: i64, rows: i64) -> Option<Self> {
        Some(Self::new(
            self.start.offset(columns, rows)?,
            self.end.offset(columns, rows)?,
        ))
    }
}

impl fmt::Display for CellRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl FromStr for CellRange {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((a, b)) => Ok(Self::new(a.parse()?, b.parse()?)),
            None => Ok(Self::single(s.parse()?)),
        }
    }
}

impl Serialize for CellRange {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CellRange {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
