/// Receives program output one line at a time.
pub trait OutputSink {
    fn emit(&mut self, module: &str, line: &str);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputLine {
    pub module: String,
    pub text: String,
}

/// Collects every line in order.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    pub lines: Vec<OutputLine>,
}

impl Transcript {
    pub fn texts(&self) -> Vec<&str> {
        self.lines.iter().map(|l| l.text.as_str()).collect()
    }

    /// Lines emitted by `module`.
    pub fn of(&self, module: &str) -> Vec<&str> {
        self.lines
            .iter()
            .filter(|l| l.module == module)
            .map(|l| l.text.as_str())
            .collect()
    }
}

impl OutputSink for Transcript {
    fn emit(&mut self, module: &str, line: &str) {
        self.lines.push(OutputLine {
            module: module.to_string(),
            text: line.to_string(),
        });
    }
}

impl<F: FnMut(&str, &str)> OutputSink for F {
    fn emit(&mut self, module: &str, line: &str) {
        self(module, line)
    }
}
