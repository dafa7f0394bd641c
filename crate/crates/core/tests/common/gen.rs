use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Builds random, mostly well-typed programs.
pub struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    scopes: Vec<Vec<(String, &'static str)>>,
    fresh: usize,
    depth: usize,
    noise: f64,
}

const CLASSICAL: [&str; 4] = ["bit", "int", "short", "float"];

impl<'r> Gen<'r> {
    /// `noise` is the rate of deliberate misuse.
    pub fn new(rng: &'r mut ChaCha8Rng, noise: f64) -> Self {
        Gen {
            rng,
            scopes: vec![Vec::new()],
            fresh: 0,
            depth: 0,
            noise,
        }
    }

    fn vars(&self, pred: impl Fn(&str) -> bool) -> Vec<String> {
        self.scopes
            .iter()
            .flatten()
            .filter(|(_, t)| pred(t))
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn pick(&mut self, pred: impl Fn(&str) -> bool) -> Option<String> {
        let vs = self.vars(pred);
        vs.choose(self.rng).cloned()
    }

    fn name(&mut self) -> String {
        self.fresh += 1;
        if self.noise > 0.0 && self.rng.random_bool(0.03) {
            return "x1".to_string();
        }
        format!("x{}", self.fresh)
    }

    fn misuse(&mut self) -> bool {
        self.rng.random_bool(self.noise)
    }

    fn expr(&mut self, depth: usize) -> String {
        if self.misuse() {
            return ["q", "nope", "1.5", "(1 < 2)"].choose(self.rng).unwrap().to_string();
        }
        match self.rng.random_range(0..if depth > 2 { 3 } else { 6 }) {
            0 => self.rng.random_range(-5..20).to_string(),
            1 => self.pick(|t| CLASSICAL.contains(&t)).unwrap_or_else(|| "2".into()),
            2 => ["0", "1", "3", "2.5"].choose(self.rng).unwrap().to_string(),
            3 => {
                let op = ["+", "-", "*", "/"].choose(self.rng).unwrap();
                format!("({} {op} {})", self.expr(depth + 1), self.expr(depth + 1))
            }
            4 => format!("-{}", self.expr(depth + 1)),
            _ => {
                let op = ["+", "*"].choose(self.rng).unwrap();
                format!("{} {op} {}", self.expr(depth + 1), self.expr(depth + 1))
            }
        }
    }

    fn cond(&mut self) -> String {
        if self.misuse() {
            return self.expr(0);
        }
        match self.rng.random_range(0..3) {
            0 => self.pick(|t| t == "bit").unwrap_or_else(|| "(1 = 1)".into()),
            1 => {
                let op = ["<", ">", "=", "!=", "<=", ">="].choose(self.rng).unwrap();
                format!("({} {op} {})", self.expr(1), self.expr(1))
            }
            _ => format!("({} & {})", self.cond_leaf(), self.cond_leaf()),
        }
    }

    fn cond_leaf(&mut self) -> String {
        format!("({} < {})", self.expr(2), self.expr(2))
    }

    fn block(&mut self, n: usize) -> String {
        self.scopes.push(Vec::new());
        self.depth += 1;
        let body: Vec<String> = (0..n).map(|_| self.stmt()).collect();
        self.depth -= 1;
        self.scopes.pop();
        format!("{{ {} }}", body.join(" "))
    }

    fn gate(&mut self) -> String {
        let qs = self.vars(|t| t == "qbit");
        if qs.is_empty() {
            return "skip;".into();
        }
        if qs.len() >= 2 && self.rng.random_bool(0.3) {
            let mut two: Vec<String> = qs.choose_multiple(self.rng, 2).cloned().collect();
            if self.misuse() {
                two[1] = two[0].clone();
            }
            let g = ["CNot", "FT(2)", "[[1,0,0,0, 0,1,0,0, 0,0,0,1, 0,0,1,0]]"].choose(self.rng).unwrap();
            return format!("{}, {} *= {g};", two[0], two[1]);
        }
        let q = qs.choose(self.rng).unwrap().clone();
        let g = match self.rng.random_range(0..5) {
            0 => "H".to_string(),
            1 => "Not".to_string(),
            2 => format!("Phase {}", self.rng.random_range(-3.0f64..3.0)),
            3 => "[[0.6, 0.8, 0.8, -0.6]]".to_string(),
            _ if self.misuse() => "CNot".to_string(),
            _ => "FT(1)".to_string(),
        };
        format!("{q} *= {g};")
    }

    fn stmt(&mut self) -> String {
        let limit = if self.depth > 2 { 7 } else { 12 };
        match self.rng.random_range(0..limit) {
            0 | 1 => {
                let name = self.name();
                let quantum = self.rng.random_bool(0.4) && self.vars(|t| t == "qbit").len() < 5;
                let (ty, init): (&'static str, String) = if quantum {
                    ("qbit", ["0", "1"].choose(self.rng).unwrap().to_string())
                } else {
                    let ty = *CLASSICAL.choose(self.rng).unwrap();
                    let init = if ty == "bit" { ["0", "1"].choose(self.rng).unwrap().to_string() } else { self.expr(1) };
                    (ty, init)
                };
                self.scopes.last_mut().unwrap().push((name.clone(), ty));
                format!("new {ty} {name} := {init};")
            }
            2 => match self.pick(|t| CLASSICAL.contains(&t)) {
                Some(v) => format!("{v} := {};", self.expr(0)),
                None => "skip;".into(),
            },
            3 | 4 => self.gate(),
            5 => match (self.pick(|t| t == "qbit"), self.pick(|t| t == "bit" || t == "int")) {
                (Some(q), Some(b)) => format!("{b} := measure {q};"),
                _ => "print \"no measure\";".into(),
            },
            6 => {
                let qs = self.vars(|t| t == "qbit");
                if qs.is_empty() {
                    return format!("print {};", self.expr(0));
                }
                let k = self.rng.random_range(1..=qs.len().min(3));
                let picked: Vec<String> = qs.choose_multiple(self.rng, k).cloned().collect();
                if self.rng.random_bool(0.5) {
                    format!("print \"state\"; dump {};", picked.join(", "))
                } else {
                    format!("dump {};", picked.join(", "))
                }
            }
            7 => match self.pick(|t| t == "qbit") {
                Some(q) => {
                    let a = self.block(2);
                    let b = self.block(2);
                    format!("measure {q} then {a} else {b};")
                }
                None => "skip;".into(),
            },
            8 => {
                let c = self.cond();
                let a = self.block(2);
                if self.rng.random_bool(0.5) {
                    let b = self.block(2);
                    format!("if {c} then {a} else {b};")
                } else {
                    format!("if {c} then {a};")
                }
            }
            9 => {
                let i = self.name();
                let n = self.rng.random_range(0..4);
                self.scopes.last_mut().unwrap().push((i.clone(), "int"));
                let body = self.block(2);
                let body = body.trim_end_matches('}').to_string();
                format!("new int {i} := 0; while ({i} < {n}) do {body} {i} := {i} + 1; }};")
            }
            10 => {
                let b = self.block(3);
                format!("{b};")
            }
            _ => format!("print {};", self.expr(0)),
        }
    }

    pub fn program(&mut self) -> String {
        let n = self.rng.random_range(1..=10);
        let body: Vec<String> = (0..n).map(|_| self.stmt()).collect();
        if self.rng.random_bool(0.2) {
            let q = self.name();
            return format!(
                "proc p: a:int, b:qbit {{ a := a + 1; b *= H; }} in {{ new qbit {q} := 0; new int k := 2; (k) := call p(k, {q}); print k; {} }};",
                body.join(" ")
            );
        }
        body.join("\n")
    }
}
