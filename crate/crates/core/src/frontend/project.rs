use super::model::{parse_source, ClassModel, MethodModel, SourceFile};
use crate::error::{Error, Result};
use crate::tree::SourceTree;
use std::collections::{BTreeMap, BTreeSet};

/// All parsed files of one revision plus a class index.
#[derive(Debug, Clone)]
pub struct ParsedProject {
    pub files: Vec<SourceFile>,
    by_name: BTreeMap<String, (usize, Vec<usize>)>,
}

impl ParsedProject {
    pub fn parse(tree: &SourceTree) -> Result<ParsedProject> {
        let mut files = Vec::new();
        for (path, text) in tree.sources() {
            files.push(parse_source(text, path)?);
        }
        ParsedProject::from_files(files)
    }

    pub fn from_files(files: Vec<SourceFile>) -> Result<ParsedProject> {
        let mut by_name = BTreeMap::new();
        for (fi, file) in files.iter().enumerate() {
            for (ci, class) in file.classes.iter().enumerate() {
                index_class(&mut by_name, class, fi, vec![ci], &file.path)?;
            }
        }
        Ok(ParsedProject { files, by_name })
    }

    pub fn classes(&self) -> Vec<&ClassModel> {
        self.files.iter().flat_map(|f| f.all_classes()).collect()
    }

    /// Look up a class by simple or fully qualified name.
    pub fn class(&self, name: &str) -> Option<&ClassModel> {
        let simple = name.rsplit('.').next().unwrap_or(name);
        let (fi, path) = self.by_name.get(simple)?;
        let mut class = &self.files[*fi].classes[path[0]];
        for &i in &path[1..] {
            class = &class.nested[i];
        }
        Some(class)
    }

    pub fn method(&self, class: &str, key: &str) -> Option<&MethodModel> {
        self.class(class)?.method(key)
    }

    pub fn file(&self, path: &str) -> Option<&SourceFile> {
        self.files.iter().find(|f| f.path == path)
    }

    pub fn superclass(&self, class: &str) -> Option<&ClassModel> {
        let sup = self.class(class)?.head.superclass.as_deref()?;
        self.class(sup)
    }

    /// Ancestors from the direct superclass upward.
    pub fn ancestors(&self, class: &str) -> Vec<&ClassModel> {
        let mut out = Vec::new();
        let mut cur = self.superclass(class);
        while let Some(c) = cur {
            if out.iter().any(|o: &&ClassModel| o.fq_name == c.fq_name) {
                break;
            }
            out.push(c);
            cur = self.superclass(&c.fq_name);
        }
        out
    }

    /// Every class (transitively) extending `class`.
    pub fn descendants(&self, class: &str) -> BTreeSet<String> {
        let target = match self.class(class) {
            Some(c) => c.fq_name.clone(),
            None => return BTreeSet::new(),
        };
        self.classes()
            .into_iter()
            .filter(|c| self.ancestors(&c.fq_name).iter().any(|a| a.fq_name == target))
            .map(|c| c.fq_name.clone())
            .collect()
    }

    /// Check that every superclass reference resolves and the hierarchy is acyclic.
    pub fn link(&self) -> Result<()> {
        for c in self.classes() {
            if let Some(sup) = &c.head.superclass {
                if self.class(sup).is_none() {
                    return Err(Error::UnresolvedSuperclass {
                        class: c.fq_name.clone(),
                        superclass: sup.clone(),
                    });
                }
            }
            let mut seen = BTreeSet::from([c.fq_name.clone()]);
            let mut cur = self.superclass(&c.fq_name);
            while let Some(s) = cur {
                if !seen.insert(s.fq_name.clone()) {
                    return Err(Error::InheritanceCycle(c.fq_name.clone()));
                }
                cur = self.superclass(&s.fq_name);
            }
        }
        Ok(())
    }

    /// Superclass map for every class: fq name → superclass fq name.
    pub fn hierarchy(&self) -> BTreeMap<String, Option<String>> {
        self.classes()
            .into_iter()
            .map(|c| {
                let sup = self.superclass(&c.fq_name).map(|s| s.fq_name.clone());
                (c.fq_name.clone(), sup)
            })
            .collect()
    }
}

fn index_class(
    by_name: &mut BTreeMap<String, (usize, Vec<usize>)>,
    class: &ClassModel,
    fi: usize,
    path: Vec<usize>,
    file: &str,
) -> Result<()> {
    if by_name.insert(class.name().to_string(), (fi, path.clone())).is_some() {
        return Err(Error::DuplicateClass {
            path: file.to_string(),
            name: class.name().to_string(),
        });
    }
    for (i, n) in class.nested.iter().enumerate() {
        let mut p = path.clone();
        p.push(i);
        index_class(by_name, n, fi, p, file)?;
    }
    Ok(())
}
