//! Paginated harvesting client for an NCBI E-utilities compatible endpoint.
//!
//! Each page is an `esearch` call (JSON id list) followed by an `efetch`
//! call (PubMed XML). Responses can be cached on disk keyed by the SHA-256
//! of the request URL, so a rerun against the same cache never touches the
//! network.

use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};

use super::record::RawRecord;
use crate::error::{Error, Result};

/// Something that can GET a URL and return the response body.
pub trait Transport {
    fn get(&self, url: &str) -> std::result::Result<String, String>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(60))
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> std::result::Result<String, String> {
        let mut resp = self.agent.get(url).call().map_err(|e| e.to_string())?;
        resp.body_mut().read_to_string().map_err(|e| e.to_string())
    }
}

/// Wraps a transport with a read-through disk cache.
pub struct CachedTransport<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: Transport> CachedTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Self {
        Self { inner, dir: dir.into() }
    }

    fn path_for(&self, url: &str) -> PathBuf {
        let digest = Sha256::digest(url.as_bytes());
        self.dir.join(format!("{}.txt", hex::encode(digest)))
    }
}

impl<T: Transport> Transport for CachedTransport<T> {
    fn get(&self, url: &str) -> std::result::Result<String, String> {
        let path = self.path_for(url);
        if let Ok(body) = std::fs::read_to_string(&path) {
            return Ok(body);
        }
        let body = self.inner.get(url)?;
        std::fs::create_dir_all(&self.dir).map_err(|e| e.to_string())?;
        crate::app::write_atomic(&path, body.as_bytes()).map_err(|e| e.to_string())?;
        Ok(body)
    }
}

#[derive(Debug, Clone)]
pub struct FetchRequest {
    pub query: String,
    /// Inclusive publication-year range.
    pub year_range: (i32, i32),
    /// Base URL, e.g. `https://eutils.ncbi.nlm.nih.gov/entrez/eutils/`.
    pub endpoint: String,
    pub page_size: usize,
    pub max_retries: u32,
    pub retry_backoff: Duration,
    pub cache_dir: Option<PathBuf>,
}

impl FetchRequest {
    pub fn new(query: &str, year_range: (i32, i32), endpoint: &str) -> Self {
        Self {
            query: query.to_string(),
            year_range,
            endpoint: endpoint.to_string(),
            page_size: 200,
            max_retries: 3,
            retry_backoff: Duration::from_millis(500),
            cache_dir: None,
        }
    }
}

/// Fetch over HTTP, through the disk cache when `cache_dir` is set.
pub fn fetch_records(request: &FetchRequest) -> Result<Vec<RawRecord>> {
    let http = HttpTransport::default();
    match &request.cache_dir {
        Some(dir) => fetch_records_with(request, &CachedTransport::new(http, dir)),
        None => fetch_records_with(request, &http),
    }
}

pub fn fetch_records_with<T: Transport>(request: &FetchRequest, transport: &T) -> Result<Vec<RawRecord>> {
    if request.query.trim().is_empty() {
        return Err(Error::invalid("fetch query must be nonempty"));
    }
    if request.page_size == 0 {
        return Err(Error::invalid("page_size must be >= 1"));
    }
    let base = request.endpoint.trim_end_matches('/');
    let term = encode(&format!("{}[tiab]", request.query));
    let mut out = Vec::new();
    let mut cursor = 0usize;
    loop {
        let search_url = format!(
            "{base}/esearch.fcgi?db=pubmed&retmode=json&term={term}&datetype=pdat&mindate={}&maxdate={}&retstart={cursor}&retmax={}",
            request.year_range.0, request.year_range.1, request.page_size
        );
        let body = get_with_retry(transport, &search_url, cursor, request)?;
        let (total, ids) = parse_search(&body, cursor)?;
        if ids.is_empty() {
            break;
        }
        let fetch_url = format!("{base}/efetch.fcgi?db=pubmed&retmode=xml&id={}", ids.join(","));
        let xml = get_with_retry(transport, &fetch_url, cursor, request)?;
        for rec in parse_articles(&xml)? {
            if matches_request(&rec, request) {
                out.push(rec);
            }
        }
        cursor += ids.len();
        if cursor >= total {
            break;
        }
    }
    Ok(out)
}

fn encode(s: &str) -> String {
    url::form_urlencoded::byte_serialize(s.as_bytes()).collect()
}

fn get_with_retry<T: Transport>(transport: &T, url: &str, cursor: usize, request: &FetchRequest) -> Result<String> {
    let mut last = String::new();
    for attempt in 0..=request.max_retries {
        match transport.get(url) {
            Ok(body) => return Ok(body),
            Err(e) => {
                log::warn!("fetch attempt {} at cursor {cursor} failed: {e}", attempt + 1);
                last = e;
                if attempt < request.max_retries {
                    std::thread::sleep(request.retry_backoff * (attempt + 1));
                }
            }
        }
    }
    Err(Error::Network { cursor, message: last })
}

fn matches_request(rec: &RawRecord, request: &FetchRequest) -> bool {
    let (lo, hi) = request.year_range;
    let q = request.query.to_lowercase();
    (lo..=hi).contains(&rec.year)
        && (rec.title.to_lowercase().contains(&q) || rec.abstract_text.to_lowercase().contains(&q))
}

fn parse_search(body: &str, cursor: usize) -> Result<(usize, Vec<String>)> {
    let bad = |m: String| Error::Parse {
        record: format!("esearch page at cursor {cursor}"),
        message: m,
    };
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| bad(e.to_string()))?;
    let res = v
        .get("esearchresult")
        .ok_or_else(|| bad("missing esearchresult".into()))?;
    let count = match res.get("count") {
        Some(serde_json::Value::String(s)) => s.parse().map_err(|_| bad(format!("bad count {s}")))?,
        Some(serde_json::Value::Number(n)) => n.as_u64().unwrap_or(0) as usize,
        _ => return Err(bad("missing count".into())),
    };
    let ids = res
        .get("idlist")
        .and_then(|l| l.as_array())
        .ok_or_else(|| bad("missing idlist".into()))?
        .iter()
        .map(|id| {
            id.as_str()
                .map(str::to_string)
                .ok_or_else(|| bad(format!("non-string id {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((count, ids))
}

fn text_of(node: roxmltree::Node) -> String {
    node.descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect::<String>()
        .trim()
        .to_string()
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, name: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn path<'a, 'i>(node: roxmltree::Node<'a, 'i>, names: &[&str]) -> Option<roxmltree::Node<'a, 'i>> {
    names.iter().try_fold(node, |n, name| child(n, name))
}

/// Parse a `PubmedArticleSet` document into raw records.
pub fn parse_articles(xml: &str) -> Result<Vec<RawRecord>> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| Error::Parse {
        record: "efetch response".into(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, art) in doc
        .root_element()
        .children()
        .filter(|n| n.has_tag_name("PubmedArticle"))
        .enumerate()
    {
        let citation = child(art, "MedlineCitation");
        let pmid = citation.and_then(|c| child(c, "PMID")).map(text_of);
        let label = pmid.clone().unwrap_or_else(|| format!("article #{i}"));
        let bad = |m: &str| Error::Parse {
            record: label.clone(),
            message: m.to_string(),
        };
        let pmid = pmid.filter(|p| !p.is_empty()).ok_or_else(|| bad("missing PMID"))?;
        let article = citation
            .and_then(|c| child(c, "Article"))
            .ok_or_else(|| bad("missing Article"))?;
        let title = child(article, "ArticleTitle").map(text_of).unwrap_or_default();
        let abstract_text = child(article, "Abstract")
            .map(|a| {
                a.children()
                    .filter(|n| n.has_tag_name("AbstractText"))
                    .map(text_of)
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .unwrap_or_default();
        let language = child(article, "Language").map(text_of).unwrap_or_default();
        let year = publication_year(article).ok_or_else(|| bad("missing publication year"))?;
        out.push(RawRecord {
            id: pmid,
            title,
            abstract_text,
            year,
            language,
        });
    }
    Ok(out)
}

fn publication_year(article: roxmltree::Node) -> Option<i32> {
    let first_year = |s: String| -> Option<i32> { s.get(..4)?.parse().ok() };
    let pub_date = path(article, &["Journal", "JournalIssue", "PubDate"]);
    pub_date
        .and_then(|d| child(d, "Year"))
        .map(text_of)
        .and_then(first_year)
        .or_else(|| {
            pub_date
                .and_then(|d| child(d, "MedlineDate"))
                .map(text_of)
                .and_then(first_year)
        })
        .or_else(|| {
            path(article, &["ArticleDate", "Year"])
                .map(text_of)
                .and_then(first_year)
        })
}

/// Where [`fetch_records`] caches responses for a given run directory.
pub fn default_cache_dir(out_dir: &Path) -> PathBuf {
    out_dir.join("cache").join("fetch")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;
    use std::collections::HashMap;

    fn article(pmid: &str, title: &str, abs: Option<&str>, year: &str, lang: &str) -> String {
        let abs = abs
            .map(|a| format!("<Abstract><AbstractText>{a}</AbstractText></Abstract>"))
            .unwrap_or_default();
        format!(
            "<PubmedArticle><MedlineCitation><PMID>{pmid}</PMID><Article>\
             <Journal><JournalIssue><PubDate><Year>{year}</Year></PubDate></JournalIssue></Journal>\
             <ArticleTitle>{title}</ArticleTitle>{abs}<Language>{lang}</Language>\
             </Article></MedlineCitation></PubmedArticle>"
        )
    }

    fn set(articles: &[String]) -> String {
        format!("<PubmedArticleSet>{}</PubmedArticleSet>", articles.concat())
    }

    /// Serves esearch pages from a fixed id list and efetch from a table.
    struct FakeEutils {
        ids: Vec<&'static str>,
        articles: HashMap<&'static str, String>,
        fail_first: RefCell<usize>,
        calls: RefCell<Vec<String>>,
    }

    impl FakeEutils {
        fn new(articles: Vec<(&'static str, String)>) -> Self {
            Self {
                ids: articles.iter().map(|(id, _)| *id).collect(),
                articles: articles.into_iter().collect(),
                fail_first: RefCell::new(0),
                calls: RefCell::new(Vec::new()),
            }
        }
    }

    fn param<'a>(url: &'a str, key: &str) -> &'a str {
        url.split(['?', '&'])
            .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
            .unwrap()
    }

    impl Transport for FakeEutils {
        fn get(&self, url: &str) -> std::result::Result<String, String> {
            self.calls.borrow_mut().push(url.to_string());
            if *self.fail_first.borrow() > 0 {
                *self.fail_first.borrow_mut() -= 1;
                return Err("connection reset".into());
            }
            if url.contains("esearch.fcgi") {
                let start: usize = param(url, "retstart").parse().unwrap();
                let max: usize = param(url, "retmax").parse().unwrap();
                let page: Vec<_> = self.ids.iter().skip(start).take(max).collect();
                Ok(serde_json::json!({"esearchresult": {
                    "count": self.ids.len().to_string(), "idlist": page}})
                .to_string())
            } else {
                let ids = param(url, "id");
                let arts: Vec<String> = ids
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|id| self.articles[id].clone())
                    .collect();
                Ok(set(&arts))
            }
        }
    }

    fn request() -> FetchRequest {
        let mut r = FetchRequest::new("autism", (2000, 2000), "http://fake/eutils/");
        r.page_size = 2;
        r.retry_backoff = Duration::ZERO;
        r
    }

    #[test]
    fn paginates_and_applies_title_abstract_and_year_rules() {
        let fake = FakeEutils::new(vec![
            ("1", article("1", "Autism genetics", Some("gene study"), "2000", "eng")),
            ("2", article("2", "Body text only", Some("infant sleep"), "2000", "eng")),
            ("3", article("3", "Siblings", Some("autism in siblings"), "2001", "eng")),
            ("4", article("4", "Vaccines", Some("AUTISM and MMR"), "2000", "eng")),
            ("5", article("5", "Autism", None, "2000", "eng")),
        ]);
        let recs = fetch_records_with(&request(), &fake).unwrap();
        let ids: Vec<_> = recs.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["1", "4", "5"]);
        assert_eq!(recs[2].abstract_text, "");
        // 3 pages of esearch + efetch.
        assert_eq!(fake.calls.borrow().len(), 6);
        assert!(fake.calls.borrow()[0].contains("term=autism%5Btiab%5D"));
    }

    #[test]
    fn empty_result_is_success() {
        let fake = FakeEutils::new(vec![]);
        assert!(fetch_records_with(&request(), &fake).unwrap().is_empty());
    }

    #[test]
    fn retries_then_reports_cursor() {
        let fake = FakeEutils::new(vec![("1", article("1", "autism", Some("x"), "2000", "eng"))]);
        *fake.fail_first.borrow_mut() = 2;
        assert_eq!(fetch_records_with(&request(), &fake).unwrap().len(), 1);

        *fake.fail_first.borrow_mut() = 100;
        let mut r = request();
        r.max_retries = 1;
        match fetch_records_with(&r, &fake) {
            Err(Error::Network { cursor, .. }) => assert_eq!(cursor, 0),
            other => panic!("expected network error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_article_names_record() {
        let xml = set(&["<PubmedArticle><MedlineCitation><PMID>77</PMID><Article>\
             <ArticleTitle>t</ArticleTitle></Article></MedlineCitation></PubmedArticle>"
            .to_string()]);
        match parse_articles(&xml) {
            Err(Error::Parse { record, .. }) => assert_eq!(record, "77"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multi_part_abstracts_and_medline_dates() {
        let xml = "<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>9</PMID><Article>\
            <Journal><JournalIssue><PubDate><MedlineDate>1998 Nov-Dec</MedlineDate></PubDate></JournalIssue></Journal>\
            <ArticleTitle>A <i>novel</i> view</ArticleTitle>\
            <Abstract><AbstractText Label=\"A\">first</AbstractText><AbstractText>second</AbstractText></Abstract>\
            <Language>eng</Language></Article></MedlineCitation></PubmedArticle></PubmedArticleSet>";
        let recs = parse_articles(xml).unwrap();
        assert_eq!(recs[0].year, 1998);
        assert_eq!(recs[0].title, "A novel view");
        assert_eq!(recs[0].abstract_text, "first second");
    }

    #[test]
    fn cache_makes_reruns_offline() {
        let dir = tempfile::tempdir().unwrap();
        let fake = FakeEutils::new(vec![("1", article("1", "autism", Some("x"), "2000", "eng"))]);
        let cached = CachedTransport::new(fake, dir.path());
        let first = fetch_records_with(&request(), &cached).unwrap();
        let n_calls = cached.inner.calls.borrow().len();
        *cached.inner.fail_first.borrow_mut() = 1000;
        let second = fetch_records_with(&request(), &cached).unwrap();
        assert_eq!(first, second);
        assert_eq!(cached.inner.calls.borrow().len(), n_calls);
    }

    #[test]
    fn http_transport_talks_to_a_real_socket() {
        use std::io::{Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (mut s, _) = listener.accept().unwrap();
            let mut buf = [0u8; 4096];
            let _ = s.read(&mut buf).unwrap();
            let body = r#"{"esearchresult":{"count":"0","idlist":[]}}"#;
            write!(
                s,
                "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        });
        let mut r = FetchRequest::new("autism", (2000, 2001), &format!("http://{addr}/"));
        r.max_retries = 0;
        let recs = fetch_records_with(&r, &HttpTransport::new(Duration::from_secs(5))).unwrap();
        assert!(recs.is_empty());
        server.join().unwrap();
    }
}
