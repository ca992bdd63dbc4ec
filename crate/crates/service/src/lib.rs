//! HTTP job API for evaluation, review and repair.
//!
//! A client posts a template, vocabularies and records; evaluation runs in
//! the background and the job is polled until `DONE`. Reviewers then post
//! decisions against issue ids and apply the session, which writes cleaned
//! records and provenance sidecars under the configured output root.
//!
//! ```text
//! POST /api/jobs                          -> 202 {"job_id"}
//! GET  /api/jobs/{id}                     -> job state
//! GET  /api/jobs/{id}/report              -> REPORT_JSON
//! GET  /api/jobs/{id}/records/{ref}       -> one record's issues and actions
//! GET  /api/jobs/{id}/actions             -> session view
//! POST /api/jobs/{id}/decisions           -> session view
//! POST /api/jobs/{id}/apply               -> repaired-records manifest
//! GET  /api/jobs/{id}/repaired/{ref}      -> cleaned record
//! GET  /api/jobs/{id}/repaired/{ref}/provenance
//! ```

mod error;

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fairlint_core::record::{record_from_value, record_to_value};
use fairlint_core::report::{record_to_doc, summary_to_doc};
use fairlint_core::repair::{file_stem, repair_records, sidecar_json, RepairedRecordSet, MANIFEST_FILE};
use fairlint_core::template::{has_errors, template_from_value, Severity};
use fairlint_core::terms::load_vocabulary;
use fairlint_core::*;
use serde::Deserialize;
use serde_json::{json, Value};

pub use error::ApiError;

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Vocabularies a job may refer to by id.
    pub vocabularies: Vec<Vocabulary>,
    /// Base directory for relative manifest locators.
    pub record_base: Option<PathBuf>,
    /// Each job's repaired records go to `<output_root>/<job_id>/`.
    pub output_root: PathBuf,
    /// Static review UI bundle served at `/`.
    pub ui_dir: Option<PathBuf>,
    /// Evaluation parallelism; 0 uses all cores.
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn as_str(self) -> &'static str {
        match self {
            JobState::Queued => "QUEUED",
            JobState::Running => "RUNNING",
            JobState::Done => "DONE",
            JobState::Failed => "FAILED",
        }
    }
}

struct Job {
    job_id: String,
    template: Arc<Template>,
    terms: Arc<TermIndex>,
    state: JobState,
    record_count: usize,
    error: Option<String>,
    /// Successfully fetched records, in report order.
    records: Vec<MetadataRecord>,
    report: Option<Arc<EvaluationReport>>,
    report_json: Option<Arc<String>>,
    session: RepairSession,
    repaired: Option<(Policy, RepairedRecordSet)>,
}

impl Job {
    fn require_done(&self) -> Result<&EvaluationReport, ApiError> {
        match (&self.report, self.state) {
            (Some(report), JobState::Done) => Ok(report),
            _ => Err(ApiError::conflict("JOB_NOT_DONE", format!("job `{}` is {}", self.job_id, self.state.as_str()))),
        }
    }

    fn view(&self) -> Value {
        let mut v = json!({
            "job_id": self.job_id,
            "template": self.template.id,
            "state": self.state.as_str(),
            "record_count": self.record_count,
        });
        if let Some(e) = &self.error {
            v["error"] = json!(e);
        }
        if let Some(report) = &self.report {
            v["summary"] = serde_json::to_value(summary_to_doc(&report.summary)).expect("summary serializes");
        }
        v
    }

    fn session_view(&self) -> Value {
        json!({
            "job_id": self.job_id,
            "actions": self.session.actions().map(RepairAction::to_json).collect::<Vec<_>>(),
        })
    }
}

struct Inner {
    config: ServiceConfig,
    jobs: Mutex<HashMap<String, Arc<Mutex<Job>>>>,
    next_id: AtomicU64,
}

/// Shared service state: the session store plus configuration.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState { inner: Arc::new(Inner { config, jobs: Mutex::new(HashMap::new()), next_id: AtomicU64::new(1) }) }
    }

    fn job(&self, id: &str) -> Result<Arc<Mutex<Job>>, ApiError> {
        self.inner
            .jobs
            .lock()
            .expect("job table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UNKNOWN_JOB", format!("no job `{id}`")))
    }
}

pub fn router(state: AppState) -> Router {
    let ui_dir = state.inner.config.ui_dir.clone();
    let api = Router::new()
        .route("/api/jobs", post(create_job))
        .route("/api/jobs/{id}", get(get_job))
        .route("/api/jobs/{id}/report", get(get_report))
        .route("/api/jobs/{id}/records/{record}", get(get_record))
        .route("/api/jobs/{id}/actions", get(get_actions))
        .route("/api/jobs/{id}/decisions", post(post_decisions))
        .route("/api/jobs/{id}/apply", post(apply_session))
        .route("/api/jobs/{id}/repaired/{record}", get(get_repaired))
        .route("/api/jobs/{id}/repaired/{record}/provenance", get(get_provenance))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Serves the API until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("MALFORMED_REQUEST", e.to_string()))
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

#[derive(Deserialize)]
struct InlineVocabulary {
    id: String,
    tsv: String,
}

#[derive(Deserialize)]
struct InlineRecord {
    #[serde(rename = "ref")]
    record_ref: String,
    document: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateJob {
    template: Value,
    /// Server-side vocabulary ids; all of them when absent.
    vocabularies: Option<Vec<String>>,
    #[serde(default)]
    inline_vocabularies: Vec<InlineVocabulary>,
    #[serde(default)]
    records: Vec<InlineRecord>,
    /// Manifest TSV text, resolved against the configured record base.
    manifest: Option<String>,
}

async fn create_job(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateJob = parse_body(&body)?;
    let config = &state.inner.config;

    let template = match &req.template {
        Value::String(doc) => parse_template(doc),
        other => template_from_value(other),
    }
    .map_err(|e| ApiError::bad_request(e.kind.code(), e.to_string()).with_detail(json!({"path": e.path})))?;

    let mut vocabularies = Vec::new();
    match &req.vocabularies {
        None => vocabularies.extend(config.vocabularies.iter().cloned()),
        Some(ids) => {
            for id in ids {
                let v = config.vocabularies.iter().find(|v| v.id() == id).ok_or_else(|| {
                    ApiError::unprocessable("UNKNOWN_VOCABULARY", format!("no server vocabulary `{id}`"))
                })?;
                vocabularies.push(v.clone());
            }
        }
    }
    for inline in &req.inline_vocabularies {
        let (v, _) = load_vocabulary(&inline.id, &inline.tsv).map_err(|e| {
            ApiError::bad_request("MALFORMED_VOCABULARY", e.to_string()).with_detail(json!({"vocabulary": inline.id}))
        })?;
        vocabularies.retain(|known| known.id() != v.id());
        vocabularies.push(v);
    }
    let known: Vec<String> = vocabularies.iter().map(|v| v.id().to_owned()).collect();
    let terms = TermIndex::new(vocabularies).map_err(|e| ApiError::bad_request("MALFORMED_VOCABULARY", e.to_string()))?;

    let diagnostics = validate_template(&template, &known);
    if has_errors(&diagnostics) {
        let errors: Vec<&TemplateDiagnostic> = diagnostics.iter().filter(|d| d.severity == Severity::Error).collect();
        return Err(ApiError::unprocessable("TEMPLATE_INVALID", errors[0].to_string())
            .with_detail(serde_json::to_value(&errors).expect("diagnostics serialize")));
    }
    if let Err(errors) = Evaluator::new(&template, &terms) {
        let list: Vec<String> = errors.iter().map(ToString::to_string).collect();
        return Err(ApiError::unprocessable("VALUESET_UNRESOLVED", list[0].clone()).with_detail(json!(list)));
    }

    let manifest = match &req.manifest {
        Some(text) => RecordManifest::parse(text).map_err(|e| ApiError::bad_request("MALFORMED_MANIFEST", e.to_string()))?,
        None => RecordManifest::default(),
    };
    let mut seen = HashSet::new();
    let refs = req.records.iter().map(|r| &r.record_ref).chain(manifest.entries.iter().map(|e| &e.record_ref));
    for r in refs {
        if !seen.insert(r.clone()) {
            return Err(ApiError::bad_request("DUPLICATE_RECORD_REF", format!("record `{r}` given twice")));
        }
    }
    let inline: Vec<Result<MetadataRecord, FetchFailure>> = req
        .records
        .iter()
        .map(|r| {
            record_from_value(&r.record_ref, &r.document)
                .map_err(|e| FetchFailure { record_ref: r.record_ref.clone(), cause: e.to_string() })
        })
        .collect();

    let job_id = format!("j{:08x}", state.inner.next_id.fetch_add(1, Ordering::Relaxed));
    let record_count = seen.len();
    let job = Arc::new(Mutex::new(Job {
        job_id: job_id.clone(),
        template: Arc::new(template),
        terms: Arc::new(terms),
        state: JobState::Queued,
        record_count,
        error: None,
        records: Vec::new(),
        report: None,
        report_json: None,
        session: RepairSession::new(Policy::Review),
        repaired: None,
    }));
    state.inner.jobs.lock().expect("job table lock").insert(job_id.clone(), job.clone());

    let fetcher = match &config.record_base {
        Some(base) => FileFetcher::with_base(base),
        None => FileFetcher::new(),
    };
    let parallelism = config.jobs;
    let work = move || run_job(&job, inline, &manifest, &fetcher, parallelism);
    if record_count == 0 {
        work();
    } else {
        tokio::task::spawn_blocking(work);
    }
    Ok((StatusCode::ACCEPTED, Json(json!({"job_id": job_id}))).into_response())
}

fn run_job(
    job: &Mutex<Job>,
    mut items: Vec<Result<MetadataRecord, FetchFailure>>,
    manifest: &RecordManifest,
    fetcher: &FileFetcher,
    parallelism: usize,
) {
    let (template, terms) = {
        let mut j = job.lock().expect("job lock");
        j.state = JobState::Running;
        (j.template.clone(), j.terms.clone())
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        items.extend(resolve_manifest(manifest, fetcher));
        let evaluator = Evaluator::new(&template, &*terms).map_err(|e| format!("{e:?}"))?;
        let report = evaluator.evaluate_fetched(&items, parallelism);
        let records: Vec<MetadataRecord> = items.into_iter().filter_map(Result::ok).collect();
        Ok::<_, String>((report, records))
    }));
    let mut j = job.lock().expect("job lock");
    match outcome {
        Ok(Ok((report, records))) => {
            j.session = RepairSession::from_report(&report, Policy::Review);
            j.report_json = Some(Arc::new(report_to_json(&report)));
            j.report = Some(Arc::new(report));
            j.records = records;
            j.state = JobState::Done;
        }
        Ok(Err(message)) => {
            j.error = Some(message);
            j.state = JobState::Failed;
        }
        Err(_) => {
            j.error = Some("evaluation panicked".into());
            j.state = JobState::Failed;
        }
    }
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let job = state.job(&id)?;
    let j = job.lock().expect("job lock");
    Ok(Json(j.view()))
}

async fn get_report(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = state.job(&id)?;
    let j = job.lock().expect("job lock");
    j.require_done()?;
    let text = j.report_json.as_ref().expect("report json cached with report");
    Ok(json_text(text.as_str().to_owned()))
}

fn unknown_record(record: &str) -> ApiError {
    ApiError::not_found("UNKNOWN_RECORD", format!("no record `{record}` in this job"))
}

async fn get_record(
    State(state): State<AppState>,
    Path((id, record)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let job = state.job(&id)?;
    let j = job.lock().expect("job lock");
    let report = j.require_done()?;
    let eval = report.record(&record).ok_or_else(|| unknown_record(&record))?;
    let values = j.records.iter().find(|r| r.record_ref == record).map(|r| record_to_value(r, &j.template));
    let actions: Vec<Value> = j.session.actions_for(&record).map(RepairAction::to_json).collect();
    Ok(Json(json!({
        "record": serde_json::to_value(record_to_doc(eval)).expect("record doc serializes"),
        "values": values,
        "actions": actions,
    })))
}

async fn get_actions(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let job = state.job(&id)?;
    let j = job.lock().expect("job lock");
    j.require_done()?;
    Ok(Json(j.session_view()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DecisionsBody {
    List(Vec<Decision>),
    Wrapped { decisions: Vec<Decision>, actor: Option<String> },
}

async fn post_decisions(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let (decisions, actor) = match parse_body::<DecisionsBody>(&body)? {
        DecisionsBody::List(list) => (list, None),
        DecisionsBody::Wrapped { decisions, actor } => (decisions, actor),
    };
    let actor = actor.unwrap_or_else(|| "reviewer".into());
    let job = state.job(&id)?;
    let mut j = job.lock().expect("job lock");
    j.require_done()?;
    let (template, terms) = (j.template.clone(), j.terms.clone());
    let evaluator = Evaluator::new(&template, &*terms).expect("value sets resolved at job creation");
    j.session.decide(&decisions, &actor, &evaluator).map_err(|e| {
        let message = e.to_string();
        match e {
            DecisionError::UnknownIssue(issue) => {
                ApiError::not_found("UNKNOWN_ISSUE", message).with_detail(json!({"issue_id": issue}))
            }
            DecisionError::InvalidManualValue { issue_id, .. } => {
                ApiError::unprocessable("INVALID_MANUAL_VALUE", message).with_detail(json!({"issue_id": issue_id}))
            }
            DecisionError::NoReplacement(issue) => {
                ApiError::unprocessable("NO_REPLACEMENT", message).with_detail(json!({"issue_id": issue}))
            }
            DecisionError::Conflict(issue) => {
                ApiError::conflict("CONFLICTING_DECISION", message).with_detail(json!({"issue_id": issue}))
            }
        }
    })?;
    Ok(Json(j.session_view()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplyRequest {
    policy: Policy,
    #[serde(default)]
    strict: bool,
}

async fn apply_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: ApplyRequest = parse_body(&body)?;
    let job = state.job(&id)?;
    let mut j = job.lock().expect("job lock");
    j.require_done()?;

    let mut session = j.session.clone();
    session.policy = req.policy;
    if req.strict && req.policy == Policy::Review && j.records.iter().all(|r| session.applicable(&r.record_ref).is_empty()) {
        return Err(ApiError::conflict("NOTHING_TO_APPLY", "no accepted actions to apply"));
    }
    let set = repair_records(&j.records, &session).map_err(|e| ApiError::conflict("CONFLICTING_ACTIONS", e.to_string()))?;

    let dir = state.inner.config.output_root.join(&j.job_id);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "WRITE_FAILED", format!("{}: {e}", dir.display()))
        })?;
    }
    let outcome = persist_output(&set, &j.template, &dir);
    let manifest = outcome.manifest_file.as_ref().and_then(|p| std::fs::read_to_string(p).ok());

    let base = format!("/api/jobs/{}/repaired", j.job_id);
    let records: Vec<Value> = outcome
        .written
        .iter()
        .map(|w| {
            let index = set.records.iter().position(|r| r.record_ref == w.record_ref).expect("written record in set");
            let name = |p: &std::path::Path| p.file_name().map(|n| n.to_string_lossy().into_owned());
            json!({
                "ref": w.record_ref,
                "applied": set.provenance[index].len(),
                "record": format!("{base}/{}", w.record_ref),
                "provenance": format!("{base}/{}/provenance", w.record_ref),
                "file": name(&w.record_file),
                "sidecar": name(&w.sidecar_file),
            })
        })
        .collect();
    let failures: Vec<Value> = outcome
        .failures
        .iter()
        .map(|f| json!({"code": "WRITE_FAILED", "ref": f.record_ref, "cause": f.cause}))
        .collect();
    let applied: usize = set.provenance.iter().map(Vec::len).sum();
    let response = json!({
        "job_id": j.job_id,
        "policy": req.policy,
        "output_dir": dir.display().to_string(),
        "manifest_file": MANIFEST_FILE,
        "manifest": manifest,
        "applied": applied,
        "records": records,
        "failures": failures,
    });
    j.repaired = Some((req.policy, set));
    Ok(Json(response))
}

fn repaired_index(j: &Job, record: &str) -> Result<usize, ApiError> {
    let (_, set) = j
        .repaired
        .as_ref()
        .ok_or_else(|| ApiError::conflict("NOT_APPLIED", format!("job `{}` has not been applied", j.job_id)))?;
    set.records.iter().position(|r| r.record_ref == record).ok_or_else(|| unknown_record(record))
}

async fn get_repaired(
    State(state): State<AppState>,
    Path((id, record)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let job = state.job(&id)?;
    let j = job.lock().expect("job lock");
    let index = repaired_index(&j, &record)?;
    let (_, set) = j.repaired.as_ref().expect("checked above");
    let body = serialize_record(&set.records[index], &j.template);
    let disposition = format!("attachment; filename=\"{}.json\"", file_stem(&record));
    Ok(([(header::CONTENT_TYPE, "application/json".to_owned()), (header::CONTENT_DISPOSITION, disposition)], body)
        .into_response())
}

async fn get_provenance(
    State(state): State<AppState>,
    Path((id, record)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let job = state.job(&id)?;
    let j = job.lock().expect("job lock");
    let index = repaired_index(&j, &record)?;
    let (_, set) = j.repaired.as_ref().expect("checked above");
    Ok(json_text(sidecar_json(&set.provenance[index])))
}
