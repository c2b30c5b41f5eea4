//! Tab-separated crosswalk files.
//!
//! ```text
//! #komohe-tsv v1
//! A	hacker	=	B	hacking	high
//! A	hacker	^	B	computers + crime	medium
//! A	isdn device	0
//! ```
//!
//! Lines starting with `#` are comments. Three tab-separated comment forms
//! are understood as directives by this reader and ignored by any other:
//! `#vocab<TAB>id<TAB>lang<TAB>discipline<TAB>name`, `#term<TAB>id<TAB>display`
//! and `#crosswalk<TAB>source<TAB>target`. The exporter opens each crosswalk
//! block with a `#crosswalk` directive, which is how a null line (whose
//! target vocabulary column is empty) finds its crosswalk on re-import.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use super::{
    check_member, split_members, Concept, CrosswalkId, Mapping, MappingRecord, RelationType, Store,
};
use crate::error::{Error, Result};
use crate::registry::{normalize_term, validate_vocab_id, Vocabulary};

pub const TSV_HEADER: &str = "#komohe-tsv v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportReport {
    pub crosswalks_created: usize,
    pub mappings_added: usize,
    pub errors: Vec<LineError>,
}

/// Import state carried between lines.
#[derive(Default)]
struct Context {
    block: Option<CrosswalkId>,
    last_target: HashMap<String, String>,
}

impl Store {
    /// Imports a crosswalk TSV stream. Unknown vocabularies and terms are
    /// registered on the fly; malformed lines are reported and skipped.
    /// Only an unreadable stream or a bad header aborts the import, and in
    /// that case nothing has been changed.
    pub fn import_tsv<R: Read>(&mut self, mut reader: R) -> Result<ImportReport> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::Format(format!("unreadable stream: {e}")))?;
        let mut lines = text.split('\n').enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end_matches('\r') == TSV_HEADER => {}
            Some((_, header)) => {
                return Err(Error::Format(format!(
                    "expected header {TSV_HEADER:?}, got {header:?}"
                )))
            }
            None => return Err(Error::Format("empty stream".into())),
        }

        let mut report = ImportReport::default();
        let mut ctx = Context::default();
        for (index, line) in lines {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let outcome = if let Some(comment) = line.strip_prefix('#') {
                self.apply_directive(comment, &mut ctx, &mut report)
            } else {
                self.import_line(line, &mut ctx, &mut report)
            };
            if let Err(err) = outcome {
                report.errors.push(LineError {
                    line: index + 1,
                    reason: err.to_string(),
                });
            }
        }
        Ok(report)
    }

    fn apply_directive(
        &mut self,
        comment: &str,
        ctx: &mut Context,
        report: &mut ImportReport,
    ) -> Result<()> {
        let fields: Vec<&str> = comment.split('\t').collect();
        match fields.as_slice() {
            ["vocab", id, lang, discipline, name] => {
                let mut vocab = Vocabulary::undeclared(id);
                if !lang.is_empty() {
                    vocab.language = Some(lang.parse()?);
                }
                vocab.discipline = discipline.to_string();
                if !name.is_empty() {
                    vocab.name = name.to_string();
                }
                self.registry.declare_vocabulary(vocab)?;
            }
            ["term", id, display] => {
                self.registry.ensure_vocabulary(id)?;
                self.registry.add_term(id, display)?;
            }
            ["crosswalk", source, target] => {
                let id = self.ensure_crosswalk_registered(source, target, report)?;
                ctx.block = Some(id);
            }
            _ => {}
        }
        Ok(())
    }

    fn ensure_crosswalk_registered(
        &mut self,
        source: &str,
        target: &str,
        report: &mut ImportReport,
    ) -> Result<CrosswalkId> {
        self.registry.ensure_vocabulary(source)?;
        self.registry.ensure_vocabulary(target)?;
        let (id, created) = self.ensure_crosswalk(source, target)?;
        if created {
            report.crosswalks_created += 1;
        }
        Ok(id)
    }

    fn import_line(
        &mut self,
        line: &str,
        ctx: &mut Context,
        report: &mut ImportReport,
    ) -> Result<()> {
        let fields: Vec<&str> = line.split('\t').collect();
        let fields = match fields.len() {
            6 => &fields[..],
            7 if fields[6].trim_start().starts_with('#') => &fields[..6],
            n => {
                return Err(Error::Format(format!("expected 6 fields, found {n}")));
            }
        };
        let (source_vocab, source_term, relation, target_vocab, target_terms, rating) = (
            fields[0], fields[1], fields[2], fields[3], fields[4], fields[5],
        );
        validate_vocab_id(source_vocab)?;
        let relation: RelationType = relation.parse()?;
        let rating = rating.parse()?;
        let source_display = split_members(source_term);
        if source_display.len() > 1 {
            return Err(Error::InvalidMapping(format!(
                "combination source {source_term:?} is not supported"
            )));
        }
        let source_display = &source_display[0];

        let target_vocab = if relation == RelationType::Null {
            if !target_terms.trim().is_empty() {
                return Err(Error::InvalidMapping(format!(
                    "null mapping carries target {target_terms:?}"
                )));
            }
            if target_vocab.is_empty() {
                self.null_target_vocab(source_vocab, ctx)?
            } else {
                target_vocab.to_string()
            }
        } else {
            if target_vocab.is_empty() || target_terms.trim().is_empty() {
                return Err(Error::InvalidMapping(format!(
                    "relation {relation} requires a target"
                )));
            }
            target_vocab.to_string()
        };
        validate_vocab_id(&target_vocab)?;

        // validate the whole line before registering anything
        let source = normalize_term(source_display)?;
        check_member(&source)?;
        let target = if relation == RelationType::Null {
            None
        } else {
            Some(Concept::parse(target_terms)?)
        };

        let crosswalk = self.ensure_crosswalk_registered(source_vocab, &target_vocab, report)?;
        self.registry
            .insert_term(source_vocab, &source, source_display)?;
        if let Some(concept) = &target {
            // Concept::parse keeps the member order of the text
            for (key, display) in concept.members().iter().zip(split_members(target_terms)) {
                self.registry.insert_term(&target_vocab, key, &display)?;
            }
        }
        if ctx.last_target.get(source_vocab) != Some(&target_vocab) {
            ctx.last_target
                .insert(source_vocab.to_string(), target_vocab.clone());
        }

        let mapping = Mapping {
            source,
            relation,
            target,
            rating,
        };
        self.insert_normalized(&crosswalk, mapping)?;
        report.mappings_added += 1;
        Ok(())
    }

    fn null_target_vocab(&self, source_vocab: &str, ctx: &Context) -> Result<String> {
        if let Some(block) = ctx.block.as_ref().filter(|b| b.source == source_vocab) {
            return Ok(block.target.clone());
        }
        if let Some(target) = ctx.last_target.get(source_vocab) {
            return Ok(target.clone());
        }
        let mut outgoing = self.crosswalks().filter(|c| c.source == source_vocab);
        match (outgoing.next(), outgoing.next()) {
            (Some(only), None) => Ok(only.target.clone()),
            _ => Err(Error::InvalidMapping(format!(
                "cannot tell which crosswalk of {source_vocab} this null mapping belongs to"
            ))),
        }
    }

    /// Writes the given crosswalks, each as one block in crosswalk order.
    /// Inside a block lines are sorted by source term, then insertion order.
    pub fn export_tsv<W: Write>(&self, crosswalks: &[CrosswalkId], mut out: W) -> Result<()> {
        let ids: BTreeSet<&CrosswalkId> = crosswalks.iter().collect();
        for id in &ids {
            if !self.has_crosswalk(id) {
                return Err(Error::not_found("crosswalk", id.to_string()));
            }
        }
        writeln!(out, "{TSV_HEADER}")?;
        for id in ids {
            self.write_block(id, false, &mut out)?;
        }
        Ok(())
    }

    /// Writes the whole store, including vocabulary metadata, every
    /// registered term and empty crosswalks, in a form [`Store::import_tsv`]
    /// restores. Mappings keep their insertion order within each crosswalk.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TSV_HEADER}")?;
        for vocab in self.registry.vocabularies() {
            writeln!(
                out,
                "#vocab\t{}\t{}\t{}\t{}",
                vocab.id,
                vocab.language.as_ref().map_or("", |l| l.as_str()),
                vocab.discipline,
                vocab.name
            )?;
        }
        for vocab in self.registry.vocabularies() {
            for (_, display) in self.registry.terms(&vocab.id)? {
                writeln!(out, "#term\t{}\t{display}", vocab.id)?;
            }
        }
        for id in self.crosswalks.keys() {
            self.write_block(id, true, &mut out)?;
        }
        Ok(())
    }

    /// `snapshot` blocks are written even when empty and stay in insertion
    /// order; export blocks are sorted by source term.
    fn write_block<W: Write>(&self, id: &CrosswalkId, snapshot: bool, out: &mut W) -> Result<()> {
        let mut records = self.crosswalk_mappings(id)?;
        if records.is_empty() && !snapshot {
            return Ok(());
        }
        if !snapshot {
            records.sort_by(|a, b| {
                a.mapping
                    .source
                    .cmp(&b.mapping.source)
                    .then(a.id.cmp(&b.id))
            });
        }
        writeln!(out, "#crosswalk\t{}\t{}", id.source, id.target)?;
        for record in records {
            writeln!(out, "{}", format_mapping_line(self, record))?;
        }
        Ok(())
    }
}

/// One TSV data line (no trailing newline), using display orthography.
pub fn format_mapping_line(store: &Store, record: &MappingRecord) -> String {
    let registry = store.registry();
    let cw = &record.crosswalk;
    let m = &record.mapping;
    let source = registry.display(&cw.source, &m.source);
    let (target_vocab, target) = match &m.target {
        None => ("", String::new()),
        Some(concept) => (
            cw.target.as_str(),
            concept
                .members()
                .iter()
                .map(|t| registry.display(&cw.target, t))
                .collect::<Vec<_>>()
                .join(" + "),
        ),
    };
    format!(
        "{}\t{source}\t{}\t{target_vocab}\t{target}\t{}",
        cw.source,
        m.relation,
        m.rating.as_str()
    )
}
