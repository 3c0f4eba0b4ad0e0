//! Minimal robots.txt support: user-agent groups, Allow/Disallow with `*` and
//! `$`, longest match wins and Allow wins ties.

#[derive(Debug, Clone, Default)]
pub struct RobotsRules {
    rules: Vec<Rule>,
}

#[derive(Debug, Clone)]
struct Rule {
    allow: bool,
    pattern: String,
}

impl RobotsRules {
    pub fn allow_all() -> Self {
        Self::default()
    }

    /// Picks the most specific group whose agent token occurs in
    /// `user_agent`, falling back to `*`.
    pub fn parse(body: &str, user_agent: &str) -> Self {
        let ua = user_agent.to_ascii_lowercase();
        let mut groups: Vec<(Vec<String>, Vec<Rule>)> = Vec::new();
        let mut in_agents = false;

        for raw in body.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let Some((key, value)) = line.split_once(':') else {
                continue;
            };
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            match key.as_str() {
                "user-agent" => {
                    if !in_agents {
                        groups.push((Vec::new(), Vec::new()));
                        in_agents = true;
                    }
                    if let Some(g) = groups.last_mut() {
                        g.0.push(value.to_ascii_lowercase());
                    }
                }
                "allow" | "disallow" => {
                    in_agents = false;
                    let Some(g) = groups.last_mut() else { continue };
                    if value.is_empty() {
                        // empty Disallow means everything is allowed
                        continue;
                    }
                    g.1.push(Rule {
                        allow: key == "allow",
                        pattern: value.to_owned(),
                    });
                }
                _ => in_agents = false,
            }
        }

        let specific = groups
            .iter()
            .filter_map(|(agents, rules)| {
                agents
                    .iter()
                    .filter(|a| a.as_str() != "*" && ua.contains(a.as_str()))
                    .map(|a| a.len())
                    .max()
                    .map(|len| (len, rules))
            })
            .max_by_key(|(len, _)| *len)
            .map(|(_, rules)| rules.clone());

        let rules = specific.unwrap_or_else(|| {
            groups
                .iter()
                .filter(|(agents, _)| agents.iter().any(|a| a == "*"))
                .flat_map(|(_, rules)| rules.iter().cloned())
                .collect()
        });
        Self { rules }
    }

    /// `path` is the URL path plus query, e.g. `/a/b?x=1`.
    pub fn is_allowed(&self, path: &str) -> bool {
        let mut best: Option<(usize, bool)> = None;
        for rule in &self.rules {
            if pattern_matches(&rule.pattern, path) {
                let len = rule.pattern.len();
                best = match best {
                    Some((l, a)) if l > len || (l == len && a) => Some((l, a)),
                    _ => Some((len, rule.allow)),
                };
            }
        }
        best.is_none_or(|(_, allow)| allow)
    }
}

fn pattern_matches(pattern: &str, path: &str) -> bool {
    let (pattern, anchored) = match pattern.strip_suffix('$') {
        Some(p) => (p, true),
        None => (pattern, false),
    };
    let parts: Vec<&str> = pattern.split('*').collect();
    let mut pos = 0;
    for (i, part) in parts.iter().enumerate() {
        if i == 0 {
            if !path.starts_with(part) {
                return false;
            }
            pos = part.len();
        } else if i == parts.len() - 1 && anchored {
            return path.len() >= pos + part.len() && path.ends_with(part);
        } else {
            match path[pos..].find(part) {
                Some(off) => pos += off + part.len(),
                None => return false,
            }
        }
    }
    !anchored || pos == path.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROBOTS: &str = "\
# comment
User-agent: *
Disallow: /private/
Allow: /private/open.html
Disallow: /*.pdf$

User-agent: kbqa-bot
Disallow: /nobots/
";

    #[test]
    fn wildcard_group_applies_to_unknown_agents() {
        let r = RobotsRules::parse(ROBOTS, "SomeBrowser/1.0");
        assert!(!r.is_allowed("/private/x.html"));
        assert!(r.is_allowed("/private/open.html"));
        assert!(r.is_allowed("/public/x.html"));
        assert!(!r.is_allowed("/files/a.pdf"));
        assert!(r.is_allowed("/files/a.pdf?download=1"));
    }

    #[test]
    fn specific_group_replaces_wildcard() {
        let r = RobotsRules::parse(ROBOTS, "kbqa-bot/0.1 (+https://example.org)");
        assert!(!r.is_allowed("/nobots/a"));
        assert!(r.is_allowed("/private/x.html"));
    }

    #[test]
    fn empty_disallow_allows_everything() {
        let r = RobotsRules::parse("User-agent: *\nDisallow:\n", "x");
        assert!(r.is_allowed("/anything"));
    }

    #[test]
    fn allow_wins_equal_length_tie() {
        let r = RobotsRules::parse("User-agent: *\nDisallow: /a\nAllow: /a\n", "x");
        assert!(r.is_allowed("/a/b"));
    }

    #[test]
    fn empty_file_allows_all() {
        assert!(RobotsRules::parse("", "x").is_allowed("/"));
        assert!(RobotsRules::allow_all().is_allowed("/private"));
    }
}
