use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, ValueEnum};
use scada_qkd::metrics::ProtocolReport;
use scada_qkd::pipeline::{
    run_pipeline, EncodingChoice, OutputFormats, RunConfig, DEFAULT_CHSH_PAIRS, DEFAULT_ROW_LIMIT,
};
use scada_qkd::protocols::{ChannelModel, EveStrategy, ProtocolKind};

/// Run BB84, B92, E91 and SARG04 key exchanges over SCADA telemetry records,
/// mask each record with the exchanged keys and report how well Bob recovers it.
///
/// Exit codes: 0 success, 1 internal error, 2 bad configuration or flags,
/// 3 I/O error, 4 input schema error, 5 no usable data.
#[derive(Debug, Parser)]
#[command(name = "scada-qkd", version, about, long_about)]
struct Args {
    /// CSV file with a header row.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// Comma-separated protocols (bb84, b92, e91, sarg04, sgs04-twoway).
    #[arg(long, value_name = "LIST", value_delimiter = ',', value_parser = parse_protocol)]
    protocols: Option<Vec<ProtocolKind>>,

    /// Also run the two-way I/Z scheme as a fifth protocol.
    #[arg(long)]
    sgs04_twoway: bool,

    /// Number of valid records to process.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_ROW_LIMIT)]
    rows: usize,

    #[arg(long, value_name = "U64", env = "SCADA_QKD_SEED", default_value_t = 0)]
    seed: u64,

    /// Put an intercept-resend eavesdropper on the quantum channel.
    #[arg(long)]
    eve: bool,

    /// `random-basis`, or `fixed:ANGLE` with ANGLE in radians about Y.
    #[arg(long, value_name = "STRATEGY", requires = "eve", value_parser = parse_strategy)]
    eve_strategy: Option<EveStrategy>,

    /// Depolarizing probability per transmitted qubit.
    #[arg(long, value_name = "P", default_value_t = 0.0)]
    noise: f64,

    /// Comma-separated names of the six feature columns. Inferred when omitted.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    columns: Option<Vec<String>>,

    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Output formats; repeat or comma-separate. Default: all.
    #[arg(long, value_name = "FORMAT", value_delimiter = ',', action = ArgAction::Append)]
    format: Vec<Format>,

    /// Disclose this fraction of each sifted key for QBER estimation and drop it from the key.
    #[arg(long, value_name = "F")]
    qber_sample_fraction: Option<f64>,

    /// Pairs in the dedicated E91 CHSH session; 0 disables it.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_CHSH_PAIRS)]
    chsh_pairs: usize,

    /// Normalize with min/max over the whole file rather than the processed rows.
    #[arg(long)]
    normalize_over_file: bool,

    /// Circuit used for the encoding diagnostics.
    #[arg(long, value_enum, default_value_t = Encoding::Simple)]
    encoding: Encoding,

    /// Measurement shots per record for encoding diagnostics.
    #[arg(long, value_name = "N", default_value_t = 0)]
    shots: usize,

    /// Worker threads. Output does not depend on this.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Abort on the first malformed row instead of skipping it.
    #[arg(long)]
    strict: bool,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Encoding {
    Simple,
    Layered,
}

fn parse_protocol(s: &str) -> Result<ProtocolKind, String> {
    s.parse().map_err(|e: scada_qkd::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<EveStrategy, String> {
    match s.trim() {
        "random-basis" => Ok(EveStrategy::InterceptResendRandomBasis),
        other => {
            let angle = other
                .strip_prefix("fixed:")
                .ok_or_else(|| format!("expected random-basis or fixed:ANGLE, got {other:?}"))?;
            let angle: f64 = angle.parse().map_err(|_| format!("bad angle {angle:?}"))?;
            if !angle.is_finite() {
                return Err(format!("angle must be finite, got {angle}"));
            }
            Ok(EveStrategy::InterceptResendFixedBasis { angle })
        }
    }
}

impl Args {
    fn into_config(self) -> RunConfig {
        let mut cfg = RunConfig::new(self.input, self.out);
        let mut protocols = self
            .protocols
            .unwrap_or_else(|| ProtocolKind::CANONICAL.to_vec());
        if self.sgs04_twoway && !protocols.contains(&ProtocolKind::Sgs04TwoWay) {
            protocols.push(ProtocolKind::Sgs04TwoWay);
        }
        cfg.protocols = protocols;
        cfg.columns = self.columns;
        cfg.row_limit = self.rows;
        cfg.skip_invalid = !self.strict;
        cfg.master_seed = self.seed;
        cfg.channel = if self.eve {
            ChannelModel::with_eve(
                self.eve_strategy
                    .unwrap_or(EveStrategy::InterceptResendRandomBasis),
            )
        } else {
            ChannelModel::ideal()
        }
        .with_noise(self.noise);
        if !self.format.is_empty() {
            cfg.formats = OutputFormats {
                json: self.format.contains(&Format::Json),
                csv: self.format.contains(&Format::Csv),
                svg: self.format.contains(&Format::Svg),
            };
        }
        cfg.qber_sample_fraction = self.qber_sample_fraction;
        cfg.chsh_pairs = self.chsh_pairs;
        cfg.normalize_over_file = self.normalize_over_file;
        cfg.encoding = match self.encoding {
            Encoding::Simple => EncodingChoice::Simple,
            Encoding::Layered => EncodingChoice::Layered,
        };
        cfg.encoding_shots = self.shots;
        cfg.threads = self.threads;
        cfg
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn print_summary(reports: &[ProtocolReport]) {
    println!(
        "{:<14} {:>8} {:>8} {:>9} {:>9} {:>9}",
        "protocol", "keysize", "match", "qber", "meandiff", "composite"
    );
    for r in reports {
        println!(
            "{:<14} {:>8.3} {:>8.3} {:>9} {:>9.4} {:>9}",
            r.protocol.name(),
            r.avg_key_size,
            r.match_rate,
            fmt_opt(r.mean_qber, 4),
            r.avg_mean_diff,
            fmt_opt(r.composite_index, 3),
        );
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let config = args.into_config();
    match run_pipeline(&config) {
        Ok(artifacts) => {
            print_summary(&artifacts.report.protocols);
            if let Some(session) = &artifacts.report.e91_chsh_session {
                println!(
                    "E91 CHSH S = {:.4} ± {:.4} over {} pairs",
                    session.estimate.s, session.estimate.std_error, session.pairs
                );
            }
            println!("outputs in {}", config.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
