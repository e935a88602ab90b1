use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::Path;

use super::{Action, GridError};

/// `(row, col)` in grid coordinates, row 0 at the top.
pub type Cell = (usize, usize);

/// A walled rectangular layout shared by every task of an environment.
///
/// Free cells are indexed in row-major order; that index is the state id used
/// by the environment and the dynamic-programming oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    free_cells: Vec<Cell>,
    index: Vec<Option<usize>>,
    goals: Vec<Cell>,
    regions: BTreeMap<String, Vec<Cell>>,
    /// `next[s][a]`: successor state of free cell `s` under action `a` (itself when blocked).
    next: Vec<[usize; 4]>,
}

impl GridMap {
    /// Parses an ASCII map.
    ///
    /// `#` is wall, `.` is free, digit `k` is the goal of task `k` (also free).
    /// Lines starting with `;` are comments; `; region NAME r0,c0-r1,c1 ...`
    /// tags inclusive rectangles of free cells with a name (e.g. `corridor`).
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let mut rows: Vec<(usize, &str)> = Vec::new();
        let mut region_lines: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if let Some(rest) = line.strip_prefix(';') {
                let rest = rest.trim();
                if rest.starts_with("region ") {
                    region_lines.push((i + 1, rest));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            rows.push((i + 1, line));
        }
        if rows.is_empty() {
            return Err(GridError::EmptyMap);
        }

        let width = rows[0].1.chars().count();
        let height = rows.len();
        let mut walls = Vec::with_capacity(width * height);
        let mut goal_at: BTreeMap<usize, Cell> = BTreeMap::new();
        for (r, &(line_no, line)) in rows.iter().enumerate() {
            let n = line.chars().count();
            if n != width {
                return Err(GridError::NotRectangular {
                    line: line_no,
                    expected: width,
                    found: n,
                });
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => walls.push(true),
                    '.' => walls.push(false),
                    '1'..='9' => {
                        let task = ch.to_digit(10).unwrap() as usize;
                        if goal_at.insert(task, (r, c)).is_some() {
                            return Err(GridError::DuplicateGoal { task, cell: (r, c) });
                        }
                        walls.push(false);
                    }
                    other => {
                        return Err(GridError::BadChar {
                            line: line_no,
                            col: c,
                            ch: other,
                        })
                    }
                }
            }
        }

        for r in 0..height {
            for c in 0..width {
                let border = r == 0 || c == 0 || r + 1 == height || c + 1 == width;
                if border && !walls[r * width + c] {
                    return Err(GridError::OpenBorder { cell: (r, c) });
                }
            }
        }

        let n_tasks = goal_at.keys().next_back().copied().unwrap_or(0);
        if n_tasks == 0 {
            return Err(GridError::NoGoals);
        }
        let mut goals = Vec::with_capacity(n_tasks);
        for task in 1..=n_tasks {
            match goal_at.get(&task) {
                Some(&cell) => goals.push(cell),
                None => return Err(GridError::MissingGoal { task }),
            }
        }

        let mut index = vec![None; width * height];
        let mut free_cells = Vec::new();
        for r in 0..height {
            for c in 0..width {
                if !walls[r * width + c] {
                    index[r * width + c] = Some(free_cells.len());
                    free_cells.push((r, c));
                }
            }
        }

        let mut map = Self {
            width,
            height,
            walls,
            free_cells,
            index,
            goals,
            regions: BTreeMap::new(),
            next: Vec::new(),
        };
        let next = map
            .free_cells
            .iter()
            .map(|&cell| Action::ALL.map(|a| map.move_from(cell, a).0))
            .collect();
        map.next = next;

        // every free cell must reach some goal
        let mut seen = vec![false; map.free_cells.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &g in &map.goals {
            let s = map.state_of(g).unwrap();
            seen[s] = true;
            queue.push_back(s);
        }
        while let Some(s) = queue.pop_front() {
            for &t in &map.next[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        if let Some(s) = seen.iter().position(|&v| !v) {
            return Err(GridError::Unreachable {
                cell: map.free_cells[s],
            });
        }

        for (line_no, decl) in region_lines {
            let (name, cells) = parse_region(line_no, decl, &map)?;
            map.regions.entry(name).or_default().extend(cells);
        }
        for cells in map.regions.values_mut() {
            cells.sort_unstable();
            cells.dedup();
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        let text = fs::read_to_string(path).map_err(|source| GridError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_tasks(&self) -> usize {
        self.goals.len()
    }

    /// Goal cell of a zero-based task id.
    pub fn goal(&self, task: usize) -> Cell {
        self.goals[task]
    }

    pub fn goals(&self) -> &[Cell] {
        &self.goals
    }

    pub fn free_cells(&self) -> &[Cell] {
        &self.free_cells
    }

    pub fn n_states(&self) -> usize {
        self.free_cells.len()
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        cell.0 >= self.height || cell.1 >= self.width || self.walls[cell.0 * self.width + cell.1]
    }

    /// Free-cell index of a cell, `None` for walls and out-of-range cells.
    pub fn state_of(&self, cell: Cell) -> Option<usize> {
        if cell.0 >= self.height || cell.1 >= self.width {
            return None;
        }
        self.index[cell.0 * self.width + cell.1]
    }

    pub fn cell_of(&self, state: usize) -> Cell {
        self.free_cells[state]
    }

    pub fn region(&self, name: &str) -> Option<&[Cell]> {
        self.regions.get(name).map(Vec::as_slice)
    }

    pub fn regions(&self) -> &BTreeMap<String, Vec<Cell>> {
        &self.regions
    }

    /// Successor of `state` under `action` and whether the move hit a wall.
    pub fn transition(&self, state: usize, action: Action) -> (usize, bool) {
        let next = self.next[state][action.index()];
        (next, next == state)
    }

    fn move_from(&self, (r, c): Cell, action: Action) -> (usize, bool) {
        let target = match action {
            Action::Up => (r.wrapping_sub(1), c),
            Action::Down => (r + 1, c),
            Action::Left => (r, c.wrapping_sub(1)),
            Action::Right => (r, c + 1),
        };
        let here = self.state_of((r, c)).expect("move from a free cell");
        match self.state_of(target) {
            Some(s) => (s, false),
            None => (here, true),
        }
    }

    /// BFS step counts from `state` to every free cell (`None` if unreachable).
    pub fn distances_from(&self, state: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_states()];
        let mut queue = VecDeque::from([state]);
        dist[state] = Some(0);
        while let Some(s) = queue.pop_front() {
            let d = dist[s].unwrap();
            for &t in &self.next[s] {
                if dist[t].is_none() {
                    dist[t] = Some(d + 1);
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    /// Longest finite shortest-path distance between any two free cells.
    pub fn diameter(&self) -> usize {
        (0..self.n_states())
            .flat_map(|s| self.distances_from(s).into_iter().flatten())
            .max()
            .unwrap_or(0)
    }

    /// Connected components of free cells, each a sorted list of state ids.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n_states()];
        let mut comps = Vec::new();
        for s in 0..self.n_states() {
            if label[s] != usize::MAX {
                continue;
            }
            let members: Vec<usize> = self
                .distances_from(s)
                .iter()
                .enumerate()
                .filter_map(|(t, d)| d.map(|_| t))
                .collect();
            for &t in &members {
                label[t] = comps.len();
            }
            comps.push(members);
        }
        comps
    }

    /// Renders the map back to ASCII (regions are not included).
    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                let ch = match self.goals.iter().position(|&g| g == (r, c)) {
                    Some(t) => char::from_digit(t as u32 + 1, 10).unwrap(),
                    None if self.walls[r * self.width + c] => '#',
                    None => '.',
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

fn parse_region(line: usize, decl: &str, map: &GridMap) -> Result<(String, Vec<Cell>), GridError> {
    let bad = |msg: String| GridError::BadRegion { line, msg };
    let mut parts = decl.split_whitespace().skip(1);
    let name = parts
        .next()
        .ok_or_else(|| bad("region needs a name".into()))?
        .to_string();
    let parse_cell = |s: &str| -> Result<Cell, GridError> {
        let (r, c) = s
            .split_once(',')
            .ok_or_else(|| bad(format!("`{s}` is not `row,col`")))?;
        let r = r.trim().parse().map_err(|_| bad(format!("bad row in `{s}`")))?;
        let c = c.trim().parse().map_err(|_| bad(format!("bad col in `{s}`")))?;
        Ok((r, c))
    };
    let mut cells = Vec::new();
    for rect in parts {
        let (lo, hi) = match rect.split_once('-') {
            Some((a, b)) => (parse_cell(a)?, parse_cell(b)?),
            None => {
                let c = parse_cell(rect)?;
                (c, c)
            }
        };
        for r in lo.0.min(hi.0)..=lo.0.max(hi.0) {
            for c in lo.1.min(hi.1)..=lo.1.max(hi.1) {
                if map.state_of((r, c)).is_none() {
                    return Err(bad(format!("cell ({r},{c}) of region `{name}` is not free")));
                }
                cells.push((r, c));
            }
        }
    }
    Ok((name, cells))
}
