use std::collections::HashSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceClass {
    Html,
    Image,
    OtherEmbedded,
    RobotsTxt,
    StaticSite,
    Liveweb,
}

impl ResourceClass {
    pub fn is_embedded(self) -> bool {
        matches!(self, ResourceClass::Image | ResourceClass::OtherEmbedded)
    }
}

/// Extension and prefix lists driving [`ResourceClass`] assignment.
///
/// The key names double as the config-file keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceClassLists {
    pub image_exts: Vec<String>,
    pub embedded_exts: Vec<String>,
    pub html_exts: Vec<String>,
    pub static_prefixes: Vec<String>,
    pub liveweb_prefixes: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for ResourceClassLists {
    fn default() -> Self {
        Self {
            image_exts: strings(&["png", "jpg", "jpeg", "gif", "ico", "bmp", "svg", "webp"]),
            embedded_exts: strings(&[
                "css", "js", "woff", "woff2", "ttf", "eot", "swf", "flv", "mp3", "mp4", "ogg", "avi",
            ]),
            html_exts: strings(&["html", "htm", "php", "asp", "aspx", "jsp", "cgi", "shtml"]),
            static_prefixes: strings(&["/static/", "/images/", "/web/web.php"]),
            liveweb_prefixes: strings(&["/liveweb/"]),
        }
    }
}

/// Compiled form of [`ResourceClassLists`].
#[derive(Debug, Clone)]
pub struct ResourceClassifier {
    image: HashSet<String>,
    embedded: HashSet<String>,
    html: HashSet<String>,
    static_prefixes: Vec<String>,
    liveweb_prefixes: Vec<String>,
}

impl Default for ResourceClassifier {
    fn default() -> Self {
        Self::new(&ResourceClassLists::default())
    }
}

impl ResourceClassifier {
    pub fn new(lists: &ResourceClassLists) -> Self {
        let set = |v: &[String]| v.iter().map(|e| e.trim_start_matches('.').to_ascii_lowercase()).collect();
        Self {
            image: set(&lists.image_exts),
            embedded: set(&lists.embedded_exts),
            html: set(&lists.html_exts),
            static_prefixes: lists.static_prefixes.clone(),
            liveweb_prefixes: lists.liveweb_prefixes.clone(),
        }
    }

    /// Archive-site chrome, liveweb proxying or the archive's own robots.txt.
    /// `path` is the request path on the archive host.
    pub fn site_class(&self, path: &str) -> Option<ResourceClass> {
        if self.static_prefixes.iter().any(|p| path.starts_with(p.as_str())) {
            Some(ResourceClass::StaticSite)
        } else if self.liveweb_prefixes.iter().any(|p| path.starts_with(p.as_str())) {
            Some(ResourceClass::Liveweb)
        } else if strip_query(path) == "/robots.txt" {
            Some(ResourceClass::RobotsTxt)
        } else {
            None
        }
    }

    /// Class of a request path on the archive host. Paths under `/web/` are
    /// judged by the path of the archived URI-R they point at.
    pub fn classify_path(&self, path: &str) -> ResourceClass {
        if let Some(class) = self.site_class(path) {
            return class;
        }
        match path.strip_prefix("/web/").and_then(|rest| rest.split_once('/')) {
            Some((_, target)) => self.classify_target(target),
            None => self.classify_by_extension(path),
        }
    }

    /// Class of an archived URI-R (absolute or schemeless).
    pub fn classify_target(&self, uri_r: &str) -> ResourceClass {
        self.classify_by_extension(target_path(uri_r))
    }

    /// Extension rule over a plain path. Unknown extensions count as pages.
    pub fn classify_by_extension(&self, path: &str) -> ResourceClass {
        let path = strip_query(path);
        let segment = path.rsplit('/').next().unwrap_or("");
        let Some((_, ext)) = segment.rsplit_once('.') else {
            return ResourceClass::Html;
        };
        let ext = ext.to_ascii_lowercase();
        if self.image.contains(&ext) {
            ResourceClass::Image
        } else if self.embedded.contains(&ext) {
            ResourceClass::OtherEmbedded
        } else {
            // html_exts and anything unlisted are both page requests.
            ResourceClass::Html
        }
    }

    pub fn is_html_ext(&self, ext: &str) -> bool {
        self.html.contains(&ext.to_ascii_lowercase())
    }
}

fn strip_query(path: &str) -> &str {
    let end = path.find(['?', '#']).unwrap_or(path.len());
    &path[..end]
}

/// Path component of a URI-R: everything after the authority.
pub(crate) fn target_path(uri_r: &str) -> &str {
    let rest = match uri_r.find("://") {
        Some(i) => &uri_r[i + 3..],
        None => match uri_r.find(":/") {
            // `http:/example.com/...`
            Some(i) if uri_r[..i].bytes().all(|b| b.is_ascii_alphabetic()) => &uri_r[i + 2..],
            _ => uri_r,
        },
    };
    match rest.find(['/', '?', '#']) {
        Some(i) => &rest[i..],
        None => "",
    }
}

/// Classify with the default lists.
pub fn classify_resource(path: &str) -> ResourceClass {
    ResourceClassifier::default().classify_path(path)
}
