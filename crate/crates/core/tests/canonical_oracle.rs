//! URI-R canonicalization against a hand-built table and against a key
//! derived independently from the `url` crate's parser.

use proptest::prelude::*;
use url::Url;
use waylog_core::canonicalize;

/// `None` means the input must be rejected.
const TABLE: &[(&str, Option<&str>)] = &[
    ("HTTP://WWW.Google.COM:80/", Some("google.com/")),
    ("http://google.com", Some("google.com/")),
    ("http://google.com/", Some("google.com/")),
    ("https://google.com/", Some("google.com/")),
    ("google.com", Some("google.com/")),
    ("www.google.com", Some("google.com/")),
    ("http://www.google.com/search?q=Memento", Some("google.com/search?q=Memento")),
    ("http://google.com:443/", Some("google.com/")),
    ("https://google.com:443/a", Some("google.com/a")),
    ("http://google.com:8080/a", Some("google.com:8080/a")),
    ("http://google.com/#top", Some("google.com/")),
    ("http://google.com#top", Some("google.com/")),
    ("http://google.com/a/b.html#s2", Some("google.com/a/b.html")),
    ("http://my-ru.net/home.php", Some("my-ru.net/home.php")),
    ("http://my-ru.net/carousel.php", Some("my-ru.net/carousel.php")),
    ("http://iyasizuku.com", Some("iyasizuku.com/")),
    ("laquadrature.net", Some("laquadrature.net/")),
    ("http://altavista.com", Some("altavista.com/")),
    ("http://www.aura.vu/", Some("aura.vu/")),
    ("http://Example.COM/Path/File.HTML", Some("example.com/Path/File.HTML")),
    ("http://example.com/%7Euser/", Some("example.com/~user/")),
    ("http://example.com/%7e", Some("example.com/~")),
    ("http://example.com/a%2Db", Some("example.com/a-b")),
    ("http://example.com/%41%42%43", Some("example.com/ABC")),
    ("http://example.com/a%2fb", Some("example.com/a%2Fb")),
    ("http://example.com/a%20b", Some("example.com/a%20b")),
    ("http://example.com/?q=%7E", Some("example.com/?q=%7E")),
    ("http://example.com?x=1", Some("example.com/?x=1")),
    ("http://example.com/a?b=1&c=2#frag", Some("example.com/a?b=1&c=2")),
    ("http://www.www.example.com/", Some("example.com/")),
    ("http://www.com/", Some("www.com/")),
    ("http://wwwexample.com/", Some("wwwexample.com/")),
    ("http://user:pw@example.com/", Some("example.com/")),
    ("http://example.com:/", Some("example.com/")),
    ("HTTPS://EXAMPLE.COM:8443/X", Some("example.com:8443/X")),
    ("ftp://ftp.example.com/pub/", Some("ftp.example.com/pub/")),
    ("http:/example.com/a", Some("example.com/a")),
    ("example.com:8080/a", Some("example.com:8080/a")),
    ("http://192.168.0.1/", Some("192.168.0.1/")),
    ("http://192.168.0.1:80/index.html", Some("192.168.0.1/index.html")),
    ("http://[::1]:8080/", Some("[::1]:8080/")),
    ("http://sub.www.example.com/", Some("sub.www.example.com/")),
    ("http://WWW.EXAMPLE.CO.UK", Some("example.co.uk/")),
    ("http://example.com//double", Some("example.com//double")),
    ("http://example.com/a/../b", Some("example.com/a/../b")),
    ("  http://example.com/  ", Some("example.com/")),
    ("about:blank", None),
    ("javascript:void(0)", None),
    ("mailto:a@b.c", None),
    ("", None),
    ("http://exa mple.com/", None),
    ("http://example.com:99999/", None),
];

#[test]
fn hand_table() {
    assert!(TABLE.len() >= 50);
    for (input, want) in TABLE {
        let got = canonicalize(input).ok();
        assert_eq!(got.as_deref(), *want, "input {input:?}");
    }
}

#[test]
fn table_outputs_are_fixed_points() {
    for (input, want) in TABLE {
        if let Some(w) = want {
            assert_eq!(canonicalize(w).as_deref(), Ok(*w), "input {input:?}");
        }
    }
}

/// Canonical key built from `url`'s parse: the same rules, none of the code.
fn reference(input: &str) -> Option<String> {
    let s = input.trim();
    let u = match Url::parse(s) {
        Ok(u) if matches!(u.scheme(), "http" | "https") => u,
        _ if s.contains("://") => return None,
        _ => Url::parse(&format!("http://{s}")).ok()?,
    };
    if !matches!(u.scheme(), "http" | "https") {
        return None;
    }
    let mut host = u.host_str()?.to_ascii_lowercase();
    while let Some(rest) = host.strip_prefix("www.").filter(|r| r.contains('.')) {
        host = rest.to_string();
    }
    let port = match u.port() {
        None | Some(80) | Some(443) => String::new(),
        Some(p) => format!(":{p}"),
    };
    let mut key = format!("{host}{port}{}", u.path());
    if let Some(q) = u.query() {
        key.push('?');
        key.push_str(q);
    }
    Some(key)
}

#[test]
fn table_agrees_with_reference_where_comparable() {
    let mut compared = 0;
    for (input, want) in TABLE {
        // `url` resolves dot segments and keeps escapes; skip inputs that use either.
        let comparable = want.is_some() && !input.contains('%') && !input.contains("/..") && input.contains("http");
        if comparable {
            assert_eq!(reference(input).as_deref(), *want, "input {input:?}");
            compared += 1;
        }
    }
    assert!(compared >= 25, "only {compared} comparable cases");
}

fn label() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9]{1,8}(-[a-zA-Z0-9]{1,4})?"
}

fn web_uri() -> impl Strategy<Value = String> {
    let scheme = prop_oneof![Just(""), Just("http://"), Just("https://"), Just("HTTP://"), Just("Https://")];
    let www = prop_oneof![Just(""), Just("www."), Just("WWW."), Just("www.www.")];
    let host = (prop::collection::vec(label(), 1..3), "[a-zA-Z]{2,4}").prop_map(|(ls, tld)| format!("{}.{tld}", ls.join(".")));
    let port = prop_oneof![Just(String::new()), Just(":80".to_string()), Just(":443".to_string()), (1024u16..65535).prop_map(|p| format!(":{p}"))];
    let path = prop::collection::vec("[A-Za-z0-9_~-]{0,8}(\\.[a-z]{2,4})?", 0..4).prop_map(|segs| {
        if segs.is_empty() {
            String::new()
        } else {
            format!("/{}", segs.join("/"))
        }
    });
    let query = prop_oneof![Just(String::new()), "[a-z0-9]{1,5}=[a-zA-Z0-9]{0,6}(&[a-z]{1,3}=[0-9]{1,3})?".prop_map(|q| format!("?{q}"))];
    let fragment = prop_oneof![Just(String::new()), "[a-z0-9]{0,6}".prop_map(|f| format!("#{f}"))];
    (scheme, www, host, port, path, query, fragment).prop_map(|(s, w, h, p, pa, q, f)| format!("{s}{w}{h}{p}{pa}{q}{f}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matches_reference(uri in web_uri()) {
        let ours = canonicalize(&uri).ok();
        prop_assert_eq!(ours, reference(&uri), "input {}", uri);
    }

    #[test]
    fn idempotent_on_web_uris(uri in web_uri()) {
        let once = canonicalize(&uri).unwrap();
        prop_assert_eq!(canonicalize(&once).unwrap(), once);
    }

    #[test]
    fn idempotent_on_arbitrary_text(s in "[ -~]{0,40}") {
        if let Ok(once) = canonicalize(&s) {
            prop_assert_eq!(canonicalize(&once), Ok(once.clone()), "input {:?}", s);
        }
    }

    #[test]
    fn scheme_case_www_and_default_port_do_not_matter(
        host in "[a-z]{1,8}\\.[a-z]{2,3}",
        path in "(/[a-z0-9]{1,6}){0,3}",
        scheme in prop_oneof![Just("http://"), Just("https://"), Just("")],
    ) {
        let plain = canonicalize(&format!("{host}{path}")).unwrap();
        let dressed = canonicalize(&format!("{scheme}WWW.{}:80{path}#x", host.to_uppercase())).unwrap();
        prop_assert_eq!(plain, dressed);
    }
}
