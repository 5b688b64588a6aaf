//! ASCII grid maps and shortest-path planning for the navigation component.

use std::collections::VecDeque;

use crate::scenario::ScenarioError;

/// An occupancy grid parsed from ASCII art. `#` is an obstacle, `.` a free
/// cell, `@` the robot's start, `D` the destination and `R` the recharging
/// station (the latter three are also free).
#[derive(Debug, Clone)]
pub struct Grid {
    width: i64,
    height: i64,
    free: Vec<bool>,
    pub start: (i64, i64),
    pub destination: (i64, i64),
    pub station: (i64, i64),
}

impl Grid {
    pub fn parse(text: &str) -> Result<Grid, ScenarioError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(ScenarioError::BadMap("map has no rows".into()));
        }
        let width = rows[0].chars().count() as i64;
        let height = rows.len() as i64;
        let mut free = vec![false; (width * height) as usize];
        let mut start = None;
        let mut destination = None;
        let mut station = None;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() as i64 != width {
                return Err(ScenarioError::BadMap(format!(
                    "row {} has width {}, expected {width}",
                    y + 1,
                    row.chars().count()
                )));
            }
            for (x, c) in row.chars().enumerate() {
                let pos = (x as i64, y as i64);
                let cell = &mut free[y * width as usize + x];
                match c {
                    '#' => *cell = false,
                    '.' => *cell = true,
                    '@' => {
                        *cell = true;
                        if start.replace(pos).is_some() {
                            return Err(ScenarioError::BadMap("more than one `@`".into()));
                        }
                    }
                    'D' => {
                        *cell = true;
                        if destination.replace(pos).is_some() {
                            return Err(ScenarioError::BadMap("more than one `D`".into()));
                        }
                    }
                    'R' => {
                        *cell = true;
                        if station.replace(pos).is_some() {
                            return Err(ScenarioError::BadMap("more than one `R`".into()));
                        }
                    }
                    other => {
                        return Err(ScenarioError::BadMap(format!(
                            "unexpected character `{other}` at row {}, column {}",
                            y + 1,
                            x + 1
                        )))
                    }
                }
            }
        }
        Ok(Grid {
            width,
            height,
            free,
            start: start.ok_or_else(|| ScenarioError::BadMap("missing `@` start".into()))?,
            destination: destination
                .ok_or_else(|| ScenarioError::BadMap("missing `D` destination".into()))?,
            station: station.ok_or_else(|| ScenarioError::BadMap("missing `R` station".into()))?,
        })
    }

    pub fn width(&self) -> i64 {
        self.width
    }

    pub fn height(&self) -> i64 {
        self.height
    }

    pub fn is_free(&self, (x, y): (i64, i64)) -> bool {
        x >= 0
            && y >= 0
            && x < self.width
            && y < self.height
            && self.free[(y * self.width + x) as usize]
    }

    /// Breadth-first shortest path over the four-connected grid. The result
    /// excludes `from` and includes `to`; it is empty when `from == to`.
    pub fn path(&self, from: (i64, i64), to: (i64, i64)) -> Option<Vec<(i64, i64)>> {
        if !self.is_free(from) || !self.is_free(to) {
            return None;
        }
        if from == to {
            return Some(Vec::new());
        }
        let idx = |(x, y): (i64, i64)| (y * self.width + x) as usize;
        let mut prev: Vec<Option<(i64, i64)>> = vec![None; self.free.len()];
        let mut seen = vec![false; self.free.len()];
        let mut queue = VecDeque::new();
        seen[idx(from)] = true;
        queue.push_back(from);
        while let Some(cur) = queue.pop_front() {
            if cur == to {
                let mut cells = Vec::new();
                let mut at = to;
                while at != from {
                    cells.push(at);
                    at = prev[idx(at)].expect("reached cell has a predecessor");
                }
                cells.reverse();
                return Some(cells);
            }
            let (x, y) = cur;
            for next in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if self.is_free(next) && !seen[idx(next)] {
                    seen[idx(next)] = true;
                    prev[idx(next)] = Some(cur);
                    queue.push_back(next);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAP: &str = "\
#####
#@.R#
###.#
#D..#
#####
";

    #[test]
    fn parses_markers() {
        let g = Grid::parse(MAP).unwrap();
        assert_eq!(g.start, (1, 1));
        assert_eq!(g.station, (3, 1));
        assert_eq!(g.destination, (1, 3));
        assert!(g.is_free((2, 1)));
        assert!(!g.is_free((1, 2)));
    }

    #[test]
    fn shortest_path_excludes_start_includes_goal() {
        let g = Grid::parse(MAP).unwrap();
        let p = g.path(g.start, g.destination).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(*p.last().unwrap(), (1, 3));
        assert_eq!(g.path(g.start, g.start).unwrap().len(), 0);
    }

    #[test]
    fn unreachable_is_none() {
        let g = Grid::parse("####\n#@##\n##D#\n#R.#\n####").unwrap();
        assert!(g.path(g.start, g.destination).is_none());
    }

    #[test]
    fn bad_maps_rejected() {
        assert!(Grid::parse("###\n#@#\n###").is_err()); // no D/R
        assert!(Grid::parse("#@D\n#R?\n").is_err()); // stray character
    }
}
