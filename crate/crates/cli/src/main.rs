//! `mnmt`: one binary exposing every pipeline operation as a subcommand.
//!
//! Input/output paths accept `-` for stdin/stdout; diagnostics go to stderr.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 adapter error.
//! `MNMT_MAP_DIR` overrides the transliteration-map directory.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use mnmt_core::corpus::{split_lines, LineCorpus};
use mnmt_core::lang::{parse_language_tag, Group, LanguageTag};
use mnmt_core::metrics;
use mnmt_core::normalize::{
    lowercase_english, minimize_whitespace, normalize_line, tokenize, NormalizationRuleSet,
};
use mnmt_core::pipeline::{
    self, DirectoryAdapter, IdentityAdapter, LookupAdapter, Order, PipelineConfig, PreparedSet,
    SubprocessAdapter, Translator,
};
use mnmt_core::subword::{
    binarize_corpus, bpe_apply_corpus, bpe_decode, bpe_learn, debinarize, BinarizedCorpus,
    BpeModel, Vocabulary,
};
use mnmt_core::translit::{
    mask_english, transliterate_line_reporting, MapRegistry, UnmappedReport,
};
use mnmt_core::Error;

#[derive(Parser)]
#[command(name = "mnmt", version, about = "Multilingual NMT corpus preparation and evaluation")]
struct Cli {
    /// Worker threads for line-parallel stages (output order is unaffected)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InOut {
    /// Input file, or - for stdin
    #[arg(default_value = "-")]
    input: String,
    /// Output file, or - for stdout
    #[arg(short, long, default_value = "-")]
    output: String,
}

#[derive(Subcommand)]
enum Command {
    /// Split punctuation from words, keeping halant/nukta attached
    Tokenize {
        /// Language code (AS BN EN GU HI KN ML MR OR PA TA TE TH)
        #[arg(long)]
        lang: String,
        #[command(flatten)]
        io: InOut,
    },
    /// Apply the language's normalization rules and minimize whitespace
    Normalize {
        /// Language code
        #[arg(long)]
        lang: String,
        #[command(flatten)]
        io: InOut,
    },
    /// Lowercase ASCII letters (English corpora)
    Lowercase {
        #[command(flatten)]
        io: InOut,
    },
    /// Transliterate to modified ITRANS with English-letter masking
    Translit {
        /// Language code
        #[arg(long)]
        lang: String,
        /// Write the unmapped-codepoint report here instead of stderr
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        io: InOut,
    },
    /// Shift ASCII letters up by 0x0DC0
    Mask {
        #[command(flatten)]
        io: InOut,
    },
    /// Shift masked letters back down by 0x0DC0
    Unmask {
        #[command(flatten)]
        io: InOut,
    },
    /// Learn a BPE merge list from a preprocessed corpus
    BpeLearn {
        /// Number of merge operations
        #[arg(long, default_value_t = pipeline::DEFAULT_BPE_OPERATIONS)]
        ops: usize,
        /// Where to write the merges file
        #[arg(long)]
        model: PathBuf,
        /// Input file, or - for stdin
        #[arg(default_value = "-")]
        input: String,
    },
    /// Segment a corpus with a learned merges file
    BpeApply {
        /// Merges file from bpe-learn
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        io: InOut,
    },
    /// Remove @@ continuation joins
    BpeDecode {
        #[command(flatten)]
        io: InOut,
    },
    /// Build a dictionary (token counts) over a BPE-applied corpus
    Dict {
        #[command(flatten)]
        io: InOut,
    },
    /// Encode a corpus as token ids against a dictionary
    Binarize {
        /// Dictionary file from dict
        #[arg(long)]
        dict: PathBuf,
        /// Input file, or - for stdin
        #[arg(default_value = "-")]
        input: String,
        /// Output .bin file
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Decode a binarized corpus back to subword text
    Debinarize {
        /// Dictionary file the corpus was binarized against
        #[arg(long)]
        dict: PathBuf,
        /// Input .bin file
        input: PathBuf,
        /// Output file, or - for stdout
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    /// Corrected type/token ratio over a seeded random sample
    Cttr {
        /// Sample size in lines (drawn with replacement)
        #[arg(long, default_value_t = 1_750_000)]
        sample: usize,
        /// RNG seed (required; no hidden entropy)
        #[arg(long)]
        seed: u64,
        /// Input file, or - for stdin
        #[arg(default_value = "-")]
        input: String,
    },
    /// Corpus BLEU of hypotheses against references
    Bleu {
        /// Reference file
        #[arg(long)]
        r#ref: PathBuf,
        /// Hypothesis file
        #[arg(long)]
        hyp: PathBuf,
        /// Maximum n-gram order
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Optional add-epsilon smoothing (off by default)
        #[arg(long)]
        smooth_eps: Option<f64>,
    },
    /// Run the full preparation pipeline into a run directory
    Prepare {
        /// Common language code
        #[arg(long)]
        common: String,
        /// Comma-separated language set
        #[arg(long)]
        langs: String,
        /// Model direction: 0 = common-to-set, 1 = set-to-common
        #[arg(long, default_value_t = 0)]
        order: u8,
        /// Transliterate before BPE
        #[arg(long)]
        translit: bool,
        /// BPE merge operations
        #[arg(long, default_value_t = pipeline::DEFAULT_BPE_OPERATIONS)]
        ops: usize,
        /// Restrict the set to one relatedness group (EI, DR, WI)
        #[arg(long)]
        group: Option<String>,
        /// Directory holding <COMMON>-<LANG>.src.txt / .tgt.txt corpus files
        #[arg(long)]
        corpus_dir: PathBuf,
        /// Base run directory; artifacts land in <run-dir>/<config-hash>/
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Evaluate an adapter on a test pair against a prepared run
    Evaluate {
        /// Prepared run directory (<run-dir>/<config-hash>)
        #[arg(long)]
        run_dir: PathBuf,
        /// Source language code
        #[arg(long)]
        src: String,
        /// Target language code
        #[arg(long)]
        tgt: String,
        /// Source-side test file
        #[arg(long)]
        test_src: PathBuf,
        /// Target-side (reference) test file
        #[arg(long)]
        test_tgt: PathBuf,
        /// Translator subprocess command line
        #[arg(long)]
        adapter_cmd: Option<String>,
        /// Alternative adapter: identity, lookup:FILE (tab-separated), dir:PATH
        #[arg(long)]
        adapter: Option<String>,
        /// Subprocess timeout in seconds
        #[arg(long, default_value_t = 600)]
        timeout: u64,
    },
    /// Two-hop evaluation through a pivot language
    PivotEval {
        /// Prepared run directory of the source-to-pivot model
        #[arg(long)]
        src_run_dir: PathBuf,
        /// Prepared run directory of the pivot-to-target model
        #[arg(long)]
        tgt_run_dir: PathBuf,
        /// Pivot language code
        #[arg(long, default_value = "EN")]
        pivot: String,
        /// Source language code
        #[arg(long)]
        src: String,
        /// Target language code
        #[arg(long)]
        tgt: String,
        /// Source-side test file
        #[arg(long)]
        test_src: PathBuf,
        /// Target-side (reference) test file
        #[arg(long)]
        test_tgt: PathBuf,
        /// Source-hop subprocess command line
        #[arg(long)]
        src_adapter_cmd: Option<String>,
        /// Target-hop subprocess command line
        #[arg(long)]
        tgt_adapter_cmd: Option<String>,
        /// Source-hop alternative adapter: identity, lookup:FILE, dir:PATH
        #[arg(long)]
        src_adapter: Option<String>,
        /// Target-hop alternative adapter: identity, lookup:FILE, dir:PATH
        #[arg(long)]
        tgt_adapter: Option<String>,
        /// Subprocess timeout in seconds
        #[arg(long, default_value_t = 600)]
        timeout: u64,
    },
    /// Print the members of a relatedness group (EI, DR, WI)
    Groups {
        /// Group name
        group: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success, anything else is usage error
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()
        {
            eprintln!("mnmt: cannot configure {jobs} jobs: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mnmt: {e:#}");
            let code = match e.downcast_ref::<Error>() {
                Some(Error::Adapter { .. }) => 3,
                Some(_) => 2,
                None => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn map_registry() -> anyhow::Result<MapRegistry> {
    match std::env::var_os("MNMT_MAP_DIR") {
        Some(dir) => Ok(MapRegistry::from_dir(dir)?),
        None => Ok(MapRegistry::builtin().clone()),
    }
}

fn read_input(path: &str) -> anyhow::Result<Vec<String>> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(split_lines(&text))
    } else {
        let bytes = std::fs::read(path)?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| anyhow::anyhow!("{path}: invalid UTF-8 at byte {}", e.valid_up_to()))?;
        Ok(split_lines(text))
    }
}

fn write_output(path: &str, lines: &[String]) -> anyhow::Result<()> {
    let mut text = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    if path == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn lang_arg(code: &str) -> anyhow::Result<LanguageTag> {
    Ok(parse_language_tag(code)?)
}

fn transform(io: &InOut, f: impl Fn(&str) -> String + Sync) -> anyhow::Result<()> {
    use rayon::prelude::*;
    let lines = read_input(&io.input)?;
    let out: Vec<String> = lines.par_iter().map(|l| f(l)).collect();
    write_output(&io.output, &out)?;
    eprintln!("{} lines", out.len());
    Ok(())
}

fn parse_adapter(
    adapter_cmd: &Option<String>,
    adapter: &Option<String>,
    timeout: u64,
) -> anyhow::Result<Box<dyn Translator>> {
    if let Some(cmd) = adapter_cmd {
        let parts: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        if parts.is_empty() {
            anyhow::bail!("--adapter-cmd is empty");
        }
        return Ok(Box::new(
            SubprocessAdapter::new(parts).with_timeout(Duration::from_secs(timeout)),
        ));
    }
    match adapter.as_deref() {
        Some("identity") => Ok(Box::new(IdentityAdapter)),
        Some(spec) if spec.starts_with("lookup:") => {
            let path = &spec["lookup:".len()..];
            let text = std::fs::read_to_string(path)?;
            let mut table = HashMap::new();
            for line in text.lines() {
                if let Some((k, v)) = line.split_once('\t') {
                    table.insert(k.to_string(), v.to_string());
                }
            }
            Ok(Box::new(LookupAdapter::new(table)))
        }
        Some(spec) if spec.starts_with("dir:") => {
            Ok(Box::new(DirectoryAdapter::new(&spec["dir:".len()..])))
        }
        Some(other) => anyhow::bail!("unknown adapter {other:?} (identity, lookup:FILE, dir:PATH)"),
        None => anyhow::bail!("one of --adapter-cmd or --adapter is required"),
    }
}

fn load_pair(
    src_path: &Path,
    src: LanguageTag,
    tgt_path: &Path,
    tgt: LanguageTag,
) -> anyhow::Result<mnmt_core::BilingualPair> {
    let s = mnmt_core::read_line_corpus(src_path, src)?;
    let t = mnmt_core::read_line_corpus(tgt_path, tgt)?;
    Ok(mnmt_core::pair_corpora(s, t)?)
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Tokenize { lang, io } => {
            let tag = lang_arg(&lang)?;
            transform(&io, |l| tokenize(l, tag))
        }
        Command::Normalize { lang, io } => {
            let tag = lang_arg(&lang)?;
            let rules = NormalizationRuleSet::for_language(tag);
            transform(&io, move |l| minimize_whitespace(&normalize_line(l, &rules)))
        }
        Command::Lowercase { io } => transform(&io, lowercase_english),
        Command::Translit { lang, report, io } => {
            let tag = lang_arg(&lang)?;
            let map = map_registry()?.get(tag)?;
            let lines = read_input(&io.input)?;
            let mut rep = UnmappedReport::default();
            let out: Vec<String> =
                lines.iter().map(|l| transliterate_line_reporting(l, &map, &mut rep)).collect();
            write_output(&io.output, &out)?;
            if !rep.is_empty() {
                match &report {
                    Some(path) => std::fs::write(path, rep.to_text())?,
                    None => eprint!("{}", rep.to_text()),
                }
            }
            eprintln!("{} lines", out.len());
            Ok(())
        }
        Command::Mask { io } => transform(&io, mask_english),
        Command::Unmask { io } => transform(&io, mnmt_core::translit::unmask_english),
        Command::BpeLearn { ops, model, input } => {
            let lines = read_input(&input)?;
            let corpus = LineCorpus::new(lines, parse_language_tag("EN")?);
            let learned = bpe_learn(&corpus, ops)?;
            std::fs::write(&model, learned.to_text())?;
            eprintln!("{} merges", learned.merges.len());
            Ok(())
        }
        Command::BpeApply { model, io } => {
            let m = BpeModel::parse(&std::fs::read_to_string(&model)?)?;
            let lines = read_input(&io.input)?;
            let corpus = LineCorpus::new(lines, parse_language_tag("EN")?);
            let out = bpe_apply_corpus(&corpus, &m);
            write_output(&io.output, &out.lines)?;
            eprintln!("{} lines", out.lines.len());
            Ok(())
        }
        Command::BpeDecode { io } => transform(&io, bpe_decode),
        Command::Dict { io } => {
            let lines = read_input(&io.input)?;
            let corpus = LineCorpus::new(lines, parse_language_tag("EN")?);
            let vocab = mnmt_core::subword::build_dictionary(&corpus);
            if io.output == "-" {
                print!("{}", vocab.to_text());
            } else {
                std::fs::write(&io.output, vocab.to_text())?;
            }
            eprintln!("{} tokens", vocab.entries().len());
            Ok(())
        }
        Command::Binarize { dict, input, output } => {
            let vocab = Vocabulary::parse(&std::fs::read_to_string(&dict)?)?;
            let lines = read_input(&input)?;
            let corpus = LineCorpus::new(lines, parse_language_tag("EN")?);
            let bin = binarize_corpus(&corpus, &vocab);
            std::fs::write(&output, bin.to_bytes())?;
            eprintln!("{} lines", bin.lines.len());
            Ok(())
        }
        Command::Debinarize { dict, input, output } => {
            let vocab = Vocabulary::parse(&std::fs::read_to_string(&dict)?)?;
            let bin = BinarizedCorpus::from_bytes(&std::fs::read(&input)?)?;
            let lines = debinarize(&bin, &vocab)?;
            write_output(&output, &lines)?;
            eprintln!("{} lines", lines.len());
            Ok(())
        }
        Command::Cttr { sample, seed, input } => {
            let lines = read_input(&input)?;
            let corpus = LineCorpus::new(lines, parse_language_tag("EN")?);
            let rep = metrics::cttr(&corpus, sample, seed)?;
            println!("{:.2}", rep.cttr);
            eprint!("{}", rep.to_text());
            Ok(())
        }
        Command::Bleu { r#ref, hyp, order, smooth_eps } => {
            let refs = read_input(&r#ref.to_string_lossy())?;
            let hyps = read_input(&hyp.to_string_lossy())?;
            if refs.len() != hyps.len() {
                return Err(Error::Alignment { src_count: hyps.len(), tgt_count: refs.len() }.into());
            }
            let stats = metrics::corpus_bleu_stats(&hyps, &refs, order);
            let score = metrics::bleu_score_with(&stats, smooth_eps)?;
            println!("{score:.2}");
            eprint!("{}", stats.to_text());
            Ok(())
        }
        Command::Prepare { common, langs, order, translit, ops, group, corpus_dir, run_dir } => {
            let common = lang_arg(&common)?;
            let mut lang_set = Vec::new();
            for code in langs.split(',') {
                lang_set.push(lang_arg(code.trim())?);
            }
            let order = match order {
                0 => Order::FromCommon,
                1 => Order::ToCommon,
                other => anyhow::bail!("--order must be 0 or 1, got {other}"),
            };
            let mut config = PipelineConfig::new(common, lang_set, order);
            config.is_translit = translit;
            config.bpe_operations = ops;
            config.group_filter = group.as_deref().map(Group::parse).transpose()?;
            let mut pairs = Vec::new();
            for lang in &config.lang_set {
                let stem = format!("{}-{}", common.code, lang.code);
                let src = corpus_dir.join(format!("{stem}.src.txt"));
                let tgt = corpus_dir.join(format!("{stem}.tgt.txt"));
                pairs.push(load_pair(&src, common, &tgt, *lang)?);
            }
            let registry = map_registry()?;
            let prep = pipeline::prepare(&config, &pairs, &run_dir, &registry)?;
            println!("{}", prep.run_dir.display());
            eprintln!("{} pairs prepared", prep.lang_pairs.len());
            Ok(())
        }
        Command::Evaluate { run_dir, src, tgt, test_src, test_tgt, adapter_cmd, adapter, timeout } => {
            let prep = PreparedSet::load(&run_dir)?;
            let pair = load_pair(&test_src, lang_arg(&src)?, &test_tgt, lang_arg(&tgt)?)?;
            let translator = parse_adapter(&adapter_cmd, &adapter, timeout)?;
            let registry = map_registry()?;
            let score = pipeline::evaluate(translator.as_ref(), &pair, &prep, &registry)?;
            println!("{score:.2}");
            Ok(())
        }
        Command::PivotEval {
            src_run_dir,
            tgt_run_dir,
            pivot,
            src,
            tgt,
            test_src,
            test_tgt,
            src_adapter_cmd,
            tgt_adapter_cmd,
            src_adapter,
            tgt_adapter,
            timeout,
        } => {
            let src_prep = PreparedSet::load(&src_run_dir)?;
            let tgt_prep = PreparedSet::load(&tgt_run_dir)?;
            let pair = load_pair(&test_src, lang_arg(&src)?, &test_tgt, lang_arg(&tgt)?)?;
            let hop1 = parse_adapter(&src_adapter_cmd, &src_adapter, timeout)?;
            let hop2 = parse_adapter(&tgt_adapter_cmd, &tgt_adapter, timeout)?;
            let registry = map_registry()?;
            let outcome = pipeline::pivot_evaluate(
                hop1.as_ref(),
                hop2.as_ref(),
                &pair,
                lang_arg(&pivot)?,
                Some((&src_prep, &tgt_prep)),
                &registry,
            )?;
            println!("{:.2}", outcome.score);
            Ok(())
        }
        Command::Groups { group } => {
            let members = pipeline::group_members(Group::parse(&group)?);
            let names: Vec<&str> = members.iter().map(|t| t.code.as_str()).collect();
            println!("{}", names.join(" "));
            Ok(())
        }
    }
}
