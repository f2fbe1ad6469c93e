//! A text-based house: rooms on a grid, a person, objects, and fetch tasks.
//!
//! Every step the agent reads the current room as a context of its own,
//! followed by the task question, and answers with one command: a direction,
//! `take the <object>` or `give the <object> to <person>`.

use std::collections::VecDeque;
use std::fmt;
use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::executive::MentalAction::{self, *};
use crate::session::Session;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    /// Order in which exits are listed.
    pub const ALL: [Direction; 4] = [Direction::North, Direction::South, Direction::East, Direction::West];

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }

    pub fn parse(word: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.name() == word)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct House {
    pub rooms: Vec<String>,
    /// Neighbor per direction, indexed like `Direction::ALL`.
    pub exits: Vec<[Option<usize>; 4]>,
    pub person: String,
    pub person_room: usize,
    /// Object names and the rooms they start in.
    pub objects: Vec<(String, usize)>,
}

fn grid(names: Vec<String>, width: usize) -> Vec<[Option<usize>; 4]> {
    let height = names.len() / width;
    (0..names.len())
        .map(|i| {
            let (r, c) = (i / width, i % width);
            [
                (r > 0).then(|| i - width),
                (r + 1 < height).then(|| i + width),
                (c + 1 < width).then(|| i + 1),
                (c > 0).then(|| i - 1),
            ]
        })
        .collect()
}

impl House {
    pub fn distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.rooms.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(r) = queue.pop_front() {
            for n in self.exits[r].iter().flatten() {
                if dist[*n].is_none() {
                    dist[*n] = Some(dist[r].unwrap() + 1);
                    queue.push_back(*n);
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<usize> {
        self.distances(a)[b]
    }

    /// Rooms exactly two moves away from `room`.
    pub fn second_neighbors(&self, room: usize) -> Vec<usize> {
        self.distances(room)
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == Some(2))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn room(&self, name: &str) -> Option<usize> {
        self.rooms.iter().position(|r| r == name)
    }

    fn exit_line(&self, dir: Direction, to: usize) -> String {
        format!("to the {} there is {}", dir.name(), self.rooms[to])
    }

    fn exit_list(&self, room: usize) -> Vec<(Direction, usize)> {
        Direction::ALL
            .iter()
            .zip(self.exits[room])
            .filter_map(|(d, n)| n.map(|n| (*d, n)))
            .collect()
    }

    /// Lines describing `room`: who and what is there, the header, then
    /// the exits. Objects listed in `away` are not shown.
    pub fn describe(&self, room: usize, away: &[usize]) -> Vec<String> {
        let mut lines = Vec::new();
        if self.person_room == room {
            lines.push(format!("{} is here", self.person));
        }
        for (i, (name, r)) in self.objects.iter().enumerate() {
            if *r == room && !away.contains(&i) {
                lines.push(format!("the {name} is here"));
            }
        }
        lines.push(format!("you are in {}", self.rooms[room]));
        lines.extend(self.exit_list(room).into_iter().map(|(d, n)| self.exit_line(d, n)));
        lines
    }

    /// Every room as its own context, as a script.
    pub fn all_rooms(&self) -> Vec<String> {
        let mut out = Vec::new();
        for room in 0..self.rooms.len() {
            out.push("#####".to_string());
            out.extend(self.describe(room, &[]));
        }
        out.push("#####".to_string());
        out
    }

    /// Shortest room path from `from` to `to`, both included.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut back = vec![usize::MAX; self.rooms.len()];
        back[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(r) = queue.pop_front() {
            if r == to {
                let mut path = vec![to];
                let mut at = to;
                while at != from {
                    at = back[at];
                    path.push(at);
                }
                path.reverse();
                return Some(path);
            }
            for &n in self.exits[r].iter().flatten() {
                if back[n] == usize::MAX {
                    back[n] = r;
                    queue.push_back(n);
                }
            }
        }
        None
    }

    fn direction_to(&self, from: usize, to: usize) -> Option<Direction> {
        self.exit_list(from).into_iter().find(|&(_, n)| n == to).map(|(d, _)| d)
    }
}

/// The 5×5 training house: rooms `room_0`..`room_24`, the person in the
/// middle and eight objects in random distinct rooms two moves away.
pub fn gen_house(seed: u64) -> House {
    let rooms: Vec<String> = (0..25).map(|i| format!("room_{i}")).collect();
    let exits = grid(rooms.clone(), 5);
    let mut house = House {
        rooms,
        exits,
        person: "John".into(),
        person_room: 12,
        objects: Vec::new(),
    };
    let mut spots = house.second_neighbors(12);
    spots.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    house.objects = spots.into_iter().enumerate().map(|(i, r)| (format!("object_{}", i + 1), r)).collect();
    house
}

/// The 3×3 test house with its own room names, person and object. The
/// object room is set per task.
pub fn test_house() -> House {
    let rooms: Vec<String> = ["attic", "library", "studio", "kitchen", "hall", "office", "cellar", "garden", "bedroom"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let exits = grid(rooms.clone(), 3);
    House {
        rooms,
        exits,
        person: "Alfred".into(),
        person_room: 4,
        objects: vec![("book".into(), 0)],
    }
}

/// Ordered (person room, object room) pairs two moves apart.
pub fn task_combinations(house: &House) -> Vec<(usize, usize)> {
    (0..house.rooms.len())
        .flat_map(|p| house.second_neighbors(p).into_iter().map(move |o| (p, o)))
        .collect()
}

/// Bring one object to the person, starting in the person's room.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub object: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// The command was carried out; the new room description follows.
    Moved(Vec<String>),
    Refused(String),
    Completed,
}

/// A running task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HouseRun {
    pub house: House,
    pub task: Task,
    pub position: usize,
    pub holding: bool,
    pub completed: bool,
}

/// What the agent has to do next, as shown on the second description line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Take,
    Give,
    FindObject,
    FindPerson,
}

impl HouseRun {
    pub fn new(house: House, task: Task) -> Result<HouseRun> {
        if task.object >= house.objects.len() {
            return Err(Error::Config(format!("no object {}", task.object)));
        }
        Ok(HouseRun {
            position: house.person_room,
            house,
            task,
            holding: false,
            completed: false,
        })
    }

    fn object(&self) -> &str {
        &self.house.objects[self.task.object].0
    }

    fn object_room(&self) -> usize {
        self.house.objects[self.task.object].1
    }

    pub fn question(&self) -> String {
        let object = self.object();
        let article = if object.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
        format!("? bring {article} {object} to {}", self.house.person)
    }

    fn status(&self) -> Status {
        match (self.holding, self.position) {
            (false, p) if p == self.object_room() => Status::Take,
            (false, _) => Status::FindObject,
            (true, p) if p == self.house.person_room => Status::Give,
            (true, _) => Status::FindPerson,
        }
    }

    fn status_line(&self) -> String {
        let (object, person) = (self.object(), &self.house.person);
        match self.status() {
            Status::Take => format!("you can take the {object}"),
            Status::Give => format!("you can give the {object} to {person}"),
            Status::FindObject => format!("you must find the {object}"),
            Status::FindPerson => format!("you must find {person}"),
        }
    }

    /// The current step as a script: a fresh context with the room
    /// description, the status line, then the question.
    pub fn step_lines(&self) -> Vec<String> {
        let away: Vec<usize> = if self.holding { vec![self.task.object] } else { Vec::new() };
        let room = self.house.describe(self.position, &away);
        let header = room.iter().position(|l| l.starts_with("you are in ")).expect("header line");
        let mut lines = vec!["#####".to_string(), room[header].clone(), self.status_line()];
        lines.extend(room[header + 1..].iter().cloned());
        lines.extend(room[..header].iter().cloned());
        lines.push(self.question());
        lines
    }

    /// Applies one command.
    pub fn house_step(&mut self, command: &str) -> Outcome {
        if self.completed {
            return Outcome::Refused("the task is over".into());
        }
        let words: Vec<&str> = command.split_whitespace().collect();
        let object = self.object().to_string();
        let person = self.house.person.clone();
        match words.as_slice() {
            [dir] => match Direction::parse(dir) {
                Some(d) => match self.house.exits[self.position][d as usize] {
                    Some(n) => {
                        self.position = n;
                        Outcome::Moved(self.step_lines())
                    }
                    None => Outcome::Refused(format!("you can not go {dir}")),
                },
                None => Outcome::Refused(format!("you can not {command}")),
            },
            ["take", "the", o] if *o == object && !self.holding && self.position == self.object_room() => {
                self.holding = true;
                Outcome::Moved(self.step_lines())
            }
            ["give", "the", o, "to", p]
                if *o == object && *p == person && self.holding && self.position == self.house.person_room =>
            {
                self.completed = true;
                Outcome::Completed
            }
            _ => Outcome::Refused(format!("you can not {command}")),
        }
    }

    /// Shortest command sequence that completes the task, from a
    /// breadth-first search over rooms.
    pub fn plan(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut at = self.position;
        let mut legs = Vec::new();
        if !self.holding {
            legs.push((self.object_room(), format!("take the {}", self.object())));
        }
        legs.push((
            self.house.person_room,
            format!("give the {} to {}", self.object(), self.house.person),
        ));
        for (to, finish) in legs {
            let path = self.house.path(at, to).expect("connected house");
            for pair in path.windows(2) {
                out.push(self.house.direction_to(pair[0], pair[1]).unwrap().name().to_string());
            }
            out.push(finish);
            at = to;
        }
        out
    }

    /// Mental actions a teacher forces for the current step. The final
    /// output and DONE come from the reward.
    pub fn teacher_actions(&self) -> Vec<MentalAction> {
        let mut a = vec![GetStartPh, GetNextPh];
        let extract = |a: &mut Vec<MentalAction>, words: usize| {
            for _ in 0..words {
                a.extend([GetW, NextW]);
            }
        };
        match self.status() {
            Status::Take => {
                a.extend([WFromWk, NextW, NextW, FlushWg]);
                extract(&mut a, 3);
            }
            Status::Give => {
                a.extend([WFromWk, NextW, NextW, FlushWg]);
                extract(&mut a, 4);
                a.extend([WgOut, FlushWg]);
                extract(&mut a, 1);
            }
            Status::FindObject | Status::FindPerson => {
                let (target, cue) = match self.status() {
                    Status::FindObject => (self.object_room(), 2),
                    _ => (self.house.person_room, 1),
                };
                a.extend([WFromWk, NextW, NextW, NextW, FlushWg]);
                extract(&mut a, cue);
                a.push(GetNextPh);
                let target_lines = self.house.describe(target, &[]);
                let header = target_lines.iter().position(|l| l.starts_with("you are in ")).expect("header line");
                for (i, (_, via)) in self.house.exit_list(self.position).into_iter().enumerate() {
                    a.extend([PushGoal, RetrAs, WFromWk, GetNextPh]);
                    let mut found = via == target;
                    if !found {
                        for line in &target_lines[header + 1..] {
                            a.push(GetNextPh);
                            if line.ends_with(&format!(" there is {}", self.house.rooms[via])) {
                                found = true;
                                break;
                            }
                        }
                    }
                    if found {
                        a.extend([FlushWg, PhFromInput, GetStartPh]);
                        a.extend(std::iter::repeat(GetNextPh).take(i + 2));
                        a.extend([NextW, NextW, GetW, NextW]);
                        return a;
                    }
                    // Back through the current room to the exit just
                    // checked, then on to the next one.
                    a.extend([GetNextPh, PhFromInput, GetStartPh]);
                    a.extend(std::iter::repeat(GetNextPh).take(i + 2));
                    a.extend([NextW, GetNextPh, NextW]);
                }
                unreachable!("a connected house always has an exit towards the target");
            }
        }
        a
    }

    /// The current step as teacher script lines: description, question,
    /// forced actions and the reward.
    pub fn teacher_lines(&self) -> Vec<String> {
        let mut lines = self.step_lines();
        let names: Vec<&str> = self.teacher_actions().iter().map(|a| a.name()).collect();
        for chunk in names.chunks(10) {
            lines.push(format!(".action {}", chunk.join(" ")));
        }
        lines.push(".reward".to_string());
        lines
    }
}

/// Capacities and step cap sized for the house tasks.
pub fn house_config() -> Config {
    Config {
        vocab_capacity: 1024,
        phrase_capacity: 8192,
        assoc_capacity: 65536,
        saann_capacity: 16384,
        t_max: 150,
        ..Config::default()
    }
}

/// Tasks completed per training-example count and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HouseReport {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub tasks: usize,
    /// `rows[n]` holds, per seed, the tasks completed after `n + 1` training
    /// examples.
    pub rows: Vec<Vec<usize>>,
}

impl HouseReport {
    /// Mean accuracy per training-example count.
    pub fn means(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().sum::<usize>() as f64 / (r.len() * self.tasks) as f64)
            .collect()
    }
}

impl fmt::Display for HouseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# virtual house config {}", self.config_hash)?;
        write!(f, "examples")?;
        for s in &self.seeds {
            write!(f, "\tseed_{s}")?;
        }
        writeln!(f, "\tmean")?;
        for (n, (row, mean)) in self.rows.iter().zip(self.means()).enumerate() {
            write!(f, "{}", n + 1)?;
            for c in row {
                write!(f, "\t{c}/{}", self.tasks)?;
            }
            writeln!(f, "\t{:.1}%", 100.0 * mean)?;
        }
        Ok(())
    }
}

fn feed(session: &mut Session, lines: &[String]) -> Result<()> {
    for line in lines {
        session.process_text(line)?;
    }
    Ok(())
}

/// A session trained on the first `examples` tasks of the house of `seed`.
pub fn train_house_session(config: &Config, seed: u64, examples: usize) -> Result<Session> {
    let house = gen_house(seed);
    let mut session = Session::new(Config {
        seed,
        auto_exploit: false,
        ..config.clone()
    })?;
    feed(&mut session, &house.all_rooms())?;
    for object in 0..examples.min(house.objects.len()) {
        let mut run = HouseRun::new(house.clone(), Task { object })?;
        while !run.completed {
            feed(&mut session, &run.teacher_lines())?;
            let command = run.plan().remove(0);
            if let Outcome::Refused(why) = run.house_step(&command) {
                return Err(Error::Contract(format!("planned command refused: {why}")));
            }
        }
    }
    Ok(session)
}

/// Runs one test task on a copy of `trained`; true when the agent completes
/// it within twice the planned number of steps.
pub fn attempt_task(trained: &Session, house: &House) -> Result<bool> {
    let mut session = trained.clone();
    feed(&mut session, &house.all_rooms())?;
    let mut run = HouseRun::new(house.clone(), Task { object: 0 })?;
    let budget = 2 * run.plan().len();
    for _ in 0..budget {
        for line in run.step_lines() {
            session.process_text(&line)?;
        }
        let command = match session.exploit() {
            Ok(answer) => answer.text(),
            Err(_) => return Ok(false),
        };
        if run.house_step(&command) == Outcome::Completed {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Trains on 1..=`max_examples` tasks of each seed's house and counts the
/// test-house tasks completed.
pub fn run_house_eval(config: &Config, seeds: &[u64], max_examples: usize) -> Result<HouseReport> {
    let base = test_house();
    let combos = task_combinations(&base);
    let jobs: Vec<(usize, u64)> = (1..=max_examples).flat_map(|n| seeds.iter().map(move |&s| (n, s))).collect();
    let counts: Vec<Result<usize>> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(n, seed)| {
                let (base, combos) = (&base, &combos);
                scope.spawn(move || -> Result<usize> {
                    let trained = train_house_session(config, seed, n)?;
                    let mut done = 0;
                    for &(person, object) in combos {
                        let mut house = base.clone();
                        house.person_room = person;
                        house.objects[0].1 = object;
                        if attempt_task(&trained, &house)? {
                            done += 1;
                        }
                    }
                    Ok(done)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("house thread")).collect()
    });
    let mut rows = vec![Vec::new(); max_examples];
    for ((n, _), c) in jobs.iter().zip(counts) {
        rows[n - 1].push(c?);
    }
    Ok(HouseReport {
        config_hash: config.hash(),
        seeds: seeds.to_vec(),
        tasks: combos.len(),
        rows,
    })
}

impl fmt::Display for House {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, name) in self.rooms.iter().enumerate() {
            write!(f, "{name}:")?;
            for (d, n) in self.exit_list(i) {
                write!(f, " {}={}", d.name(), self.rooms[n])?;
            }
            writeln!(f)?;
        }
        writeln!(f, "{} in {}", self.person, self.rooms[self.person_room])?;
        for (o, r) in &self.objects {
            writeln!(f, "{o} in {}", self.rooms[*r])?;
        }
        Ok(())
    }
}
