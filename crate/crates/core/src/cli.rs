//! Command-line front end. Every subcommand is a thin wrapper over one
//! library operation; paths not given on the command line fall back to the
//! resolved [`ServiceConfig`].

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::clustering::bakeoff;
use crate::config::{KeyValues, ServiceConfig};
use crate::corpus::{ingest, load_labelled, preprocess, CorpusFormat, LemmaTable, StopWords};
use crate::embedding::{pca_fit, EmbeddingTable};
use crate::qgen::{self, build_vocab, load_training_corpus, tokenize, Hyperparams, Seq2SeqModel, TrainMode};
use crate::service::{serve, Hub};
use crate::session::Phase;
use crate::texteval::{evaluate_model, SynonymTable};

pub type CliResult = Result<(), Box<dyn std::error::Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(name = "qir", version, about = "Question-driven interactive retrieval")]
pub struct Cli {
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Key-value config file.
    #[arg(long, global = true, env = "QIR_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Preprocess a corpus and report or write its documents.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        format: Option<CorpusFormat>,
        /// Write the preprocessed documents as JSON lines.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Mean-pool document embeddings, optionally reduced with PCA.
    Embed {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        format: Option<CorpusFormat>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        pca: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score the four clustering algorithms on a labelled phrase list.
    ClusterBakeoff {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        json: bool,
    },
    /// Train the question generator on answer/question pairs.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "word")]
        mode: TrainMode,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = qgen::DEFAULT_EMBED_DIM)]
        embed_dim: usize,
        #[arg(long, default_value_t = qgen::DEFAULT_HIDDEN)]
        hidden: usize,
        #[arg(long, default_value_t = 3)]
        patience: usize,
        #[arg(long, default_value_t = 5)]
        max_words: usize,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        /// Stop once the re-evaluated perplexity falls below this.
        #[arg(long)]
        target_perplexity: Option<f64>,
        /// Initialize word embeddings from a vector file.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// BLEU-1/2, METEOR, perplexity and accuracy of a trained model.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "word")]
        mode: TrainMode,
        #[arg(long, default_value_t = 5)]
        max_words: usize,
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Generate one question from a word or sentence.
    Ask {
        #[arg(long)]
        input: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = qgen::DEFAULT_MAX_LEN)]
        max_len: usize,
    },
    /// Run a retrieval session in the terminal, one answer per line.
    Session {
        #[arg(long, default_value = "")]
        query: String,
        #[arg(long)]
        id: Option<String>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
}

/// Config file (if any) and `QIR_*` overrides from `env`, then `--seed`.
pub fn resolve_config(cli: &Cli, env: impl IntoIterator<Item = (String, String)>) -> Result<ServiceConfig, Box<dyn std::error::Error + Send + Sync>> {
    let file = cli.config.as_ref().map(KeyValues::load).transpose()?;
    let mut cfg = ServiceConfig::resolve(file.as_ref(), env)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn lemma_table(cfg: &ServiceConfig) -> Result<LemmaTable, Box<dyn std::error::Error + Send + Sync>> {
    Ok(match &cfg.lemmas {
        Some(p) => LemmaTable::load(p)?,
        None => LemmaTable::bundled(),
    })
}

fn stop_words(cfg: &ServiceConfig) -> Result<StopWords, Box<dyn std::error::Error + Send + Sync>> {
    Ok(match &cfg.stopwords {
        Some(p) => StopWords::load(p)?,
        None => StopWords::bundled(),
    })
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CliResult {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs one parsed command. `input` feeds the interactive session loop.
pub fn run(cli: Cli, env: impl IntoIterator<Item = (String, String)>, input: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let cfg = resolve_config(&cli, env)?;
    match cli.command {
        Command::Ingest { input: path, format, output } => {
            let lemmas = lemma_table(&cfg)?;
            let corpus = ingest(path.as_ref().unwrap_or(&cfg.corpus), format.unwrap_or(cfg.corpus_format), &lemmas)?;
            let sentences: usize = corpus.iter().map(|d| d.sentences.len()).sum();
            let mut vocab: Vec<&str> = corpus.iter().flat_map(|d| d.lemmas()).collect();
            vocab.sort_unstable();
            vocab.dedup();
            writeln!(out, "{} documents, {} sentences, {} distinct lemmas", corpus.len(), sentences, vocab.len())?;
            if let Some(p) = output {
                let mut text = String::new();
                for d in &corpus {
                    text.push_str(&serde_json::to_string(d)?);
                    text.push('\n');
                }
                fs::write(p, text)?;
            }
        }
        Command::Embed {
            input: path,
            format,
            embeddings,
            pca,
            output,
        } => {
            let lemmas = lemma_table(&cfg)?;
            let corpus = ingest(path.as_ref().unwrap_or(&cfg.corpus), format.unwrap_or(cfg.corpus_format), &lemmas)?;
            let table = EmbeddingTable::load(embeddings.as_ref().unwrap_or(&cfg.embeddings))?;
            let mut ids = Vec::new();
            let mut vectors = Vec::new();
            for d in &corpus {
                match table.embed_words(d.lemmas()) {
                    Ok(v) => {
                        ids.push(d.id.clone());
                        vectors.push(v);
                    }
                    Err(e) => eprintln!("skipping document {}: {e}", d.id),
                }
            }
            if let Some(dim) = pca {
                let model = pca_fit(&vectors, dim)?;
                vectors = vectors.iter().map(|v| model.transform(v)).collect::<Result<_, _>>()?;
                eprintln!("explained variance: {:?}", model.explained_variance);
            }
            let mut text = String::new();
            for (id, v) in ids.iter().zip(&vectors) {
                text.push_str(&json!({ "id": id, "vector": v }).to_string());
                text.push('\n');
            }
            write_or_print(output.as_deref(), &text, out)?;
        }
        Command::ClusterBakeoff { data, embeddings, k, json } => {
            let lemmas = lemma_table(&cfg)?;
            let table = EmbeddingTable::load(embeddings.as_ref().unwrap_or(&cfg.embeddings))?;
            let mut points = Vec::new();
            let mut labels = Vec::new();
            for item in load_labelled(&data)? {
                match table.embed_phrase(&preprocess(&item.text, &lemmas)) {
                    Ok(v) => {
                        points.push(v);
                        labels.push(item.category);
                    }
                    Err(e) => eprintln!("skipping {:?}: {e}", item.text),
                }
            }
            let report = bakeoff(&points, &labels, k, cfg.seed)?;
            let text = if json { report.to_json() + "\n" } else { report.to_table() };
            out.write_all(text.as_bytes())?;
        }
        Command::Train {
            data,
            mode,
            epochs,
            learning_rate,
            embed_dim,
            hidden,
            patience,
            max_words,
            min_count,
            target_perplexity,
            embeddings,
            output,
        } => {
            let corpus = load_training_corpus(&data)?;
            let stopwords = stop_words(&cfg)?;
            let mut model = Seq2SeqModel::new(build_vocab(&corpus, min_count), embed_dim, hidden, cfg.seed);
            if let Some(p) = embeddings {
                let n = model.init_embeddings(&EmbeddingTable::load(p)?);
                writeln!(out, "initialized {n} embeddings")?;
            }
            let hyper = Hyperparams {
                epochs,
                learning_rate,
                patience,
                max_words,
                seed: cfg.seed,
                target_perplexity,
                ..Hyperparams::default()
            };
            let mut lines = Vec::new();
            let report = qgen::train(&mut model, &corpus, mode, &hyper, &stopwords, |s| {
                let eval = s.eval_perplexity.map(|p| format!(" eval_ppl {p:.4}")).unwrap_or_default();
                lines.push(format!(
                    "epoch {:>3}  loss {:.4}  ppl {:.4}  acc {:.3}  lr {:.4}{eval}",
                    s.epoch, s.loss, s.perplexity, s.accuracy, s.learning_rate
                ));
            })?;
            for l in lines {
                writeln!(out, "{l}")?;
            }
            let path = output.unwrap_or_else(|| cfg.model.clone());
            model.save(&path)?;
            writeln!(out, "{} instances, {} epochs, saved {}", report.instances, report.epochs.len(), path.display())?;
        }
        Command::Eval {
            data,
            model,
            mode,
            max_words,
            synonyms,
            json,
        } => {
            let corpus = load_training_corpus(&data)?;
            let model = Seq2SeqModel::load(model.as_ref().unwrap_or(&cfg.model))?;
            let synonyms = synonyms.map(SynonymTable::load).transpose()?;
            let (report, _) = evaluate_model(&model, &corpus, mode, &stop_words(&cfg)?, max_words, cfg.max_question_len, synonyms.as_ref())?;
            let label = match mode {
                TrainMode::Sentence => "sentence",
                TrainMode::Word => "word",
            };
            let text = if json { report.to_json() + "\n" } else { report.to_table(label) };
            out.write_all(text.as_bytes())?;
        }
        Command::Ask { input: text, model, max_len } => {
            let model = Seq2SeqModel::load(model.as_ref().unwrap_or(&cfg.model))?;
            let g = model.generate_question(&tokenize(&text), max_len)?;
            writeln!(out, "{}", g.tokens.join(" "))?;
        }
        Command::Session { query, id } => {
            cfg.validate()?;
            let hub = Hub::from_config(&cfg)?;
            run_terminal_session(&hub, &query, id.as_deref(), input, out)?;
        }
        Command::Serve { listen } => {
            cfg.validate()?;
            let hub = Arc::new(Hub::from_config(&cfg)?);
            let listen = listen.unwrap_or_else(|| cfg.listen.clone());
            let rt = tokio::runtime::Runtime::new()?;
            writeln!(out, "listening on {listen}")?;
            out.flush()?;
            rt.block_on(serve(hub, &listen))?;
        }
    }
    Ok(())
}

/// Prompts with each question and reads one answer per line until the
/// session finishes or input ends. Unusable answers are re-prompted.
pub fn run_terminal_session(hub: &Hub, query: &str, id: Option<&str>, input: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let mut session = hub.start(query, id)?;
    writeln!(out, "session {}", session.id)?;
    while session.phase == Phase::AwaitingAnswer {
        writeln!(out, "Q: {}", session.question().unwrap_or_default())?;
        out.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            writeln!(out, "input ended; session {} left open", session.id)?;
            return Ok(());
        }
        match hub.answer(&session.id, line.trim()) {
            Ok((s, turn)) => {
                writeln!(out, "   {:?} (score {:.4}, {} documents left)", turn.action, turn.wmd_score, turn.remaining)?;
                session = s;
            }
            Err(e) if e.status() == axum::http::StatusCode::BAD_REQUEST => writeln!(out, "   {e}; try again")?,
            Err(e) => return Err(e.into()),
        }
    }
    writeln!(out, "{:?}", session.phase)?;
    for (i, d) in session.result.iter().enumerate() {
        writeln!(out, "{:>2}. [{}] {}", i + 1, d.doc_id, d.text)?;
    }
    Ok(())
}
