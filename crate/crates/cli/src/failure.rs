use fdaclust::ErrorClass;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    /// One JSON line on standard error.
    pub fn report(&self) {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Data(m) => ("data", m),
            Failure::Numerical(m) => ("numerical", m),
        };
        let line = serde_json::json!({
            "error": kind,
            "message": message,
            "exit_code": self.exit_code(),
        });
        eprintln!("{line}");
    }
}

impl From<fdaclust::Error> for Failure {
    fn from(e: fdaclust::Error) -> Self {
        match e.class() {
            ErrorClass::Data => Failure::Data(e.to_string()),
            ErrorClass::Numerical => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(format!("invalid JSON: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Data(format!("invalid CSV: {e}"))
    }
}
