//! A fixed 114-turn conversation about cancer-associated fibroblasts (CAFs)
//! in pancreatic adenocarcinoma.

use crate::message::{alternating_role, Message};
use crate::tokens::TokenCounter;

pub const BASELINE_MESSAGES: usize = 114;

const TURNS: [&str; BASELINE_MESSAGES] = [
    // Setup
    "We are starting the CAF project today. The discovery cohort is FACT dataset=TCGA-PAAD; with FACT sample_count=178; primary tumours.",
    "Understood. TCGA-PAAD with 178 samples. I will pull the RNA-seq counts and the clinical tables first.",
    "Our working idea: FACT hypothesis=FAP+ CAFs drive chemoresistance; so we should focus on FAP-high stroma.",
    "Noted. I will score stromal FAP expression per sample and relate it to gemcitabine response.",
    "The marker panel for CAFs is FACT marker_panel=FAP, ACTA2, PDGFRB; please keep all three in every plot.",
    "I will track FAP, ACTA2 and PDGFRB together. ACTA2 marks myofibroblastic CAFs, FAP the broader activated pool.",
    "For differential expression use FACT p_threshold=0.05; adjusted, for now.",
    "Using adjusted p < 0.05 as the significance cutoff.",
    "And a fold-change cutoff of FACT fc_cutoff=1.5; to start with.",
    "Fold-change cutoff set to 1.5. I will report both up and down regulated genes.",
    // Preprocessing
    "How many samples survive QC?",
    "All 178 pass the basic library-size check. Two have low tumour purity but I kept them flagged.",
    "Keep them but mark them in the figures.",
    "Done. Purity is shown as a side bar in the heatmap.",
    "Normalize with DESeq2 size factors, then a variance-stabilizing transform.",
    "Normalization finished with DESeq2 and VST. The PCA shows no obvious batch split.",
    "What does PC1 correlate with?",
    "PC1 tracks tumour purity closely, as expected for bulk tissue.",
    "Let's deconvolve stromal fractions before any association tests.",
    "I ran a reference-based deconvolution. Estimated fibroblast fractions range from 4% to 38%.",
    "Plot fibroblast fraction against FAP expression.",
    "FAP rises with fibroblast fraction, Spearman rho around 0.71.",
    "And ACTA2?",
    "ACTA2 also rises but is noisier, rho around 0.52. Smooth muscle in vessels likely contributes.",
    "PDGFRB?",
    "PDGFRB correlates at rho 0.64. It is expressed by pericytes as well as fibroblasts.",
    // First analysis
    "Split samples into FAP-high and FAP-low at the median and run DE.",
    "With p < 0.05 and fold change 1.5 there are 1,284 DE genes between FAP-high and FAP-low tumours.",
    "That seems like a lot. Any pathway themes?",
    "ECM organization, collagen formation and TGF-beta signalling dominate the up-regulated set.",
    "Any link to chemoresistance genes?",
    "A few ABC transporters are up in FAP-high, but the effect sizes are modest.",
    "Check survival by FAP group.",
    "Kaplan-Meier shows shorter overall survival for FAP-high, log-rank p = 0.03.",
    "Adjust for stage and grade.",
    "In a Cox model with stage and grade, FAP-high has hazard ratio 1.42, p = 0.04.",
    "Borderline. Too many DE genes and a weak survival signal.",
    "Agreed, the signal is not very sharp at the current thresholds.",
    // Threshold tightening
    "Let's tighten the significance cutoff: FACT p_threshold=0.01; adjusted from here on.",
    "Switching to adjusted p < 0.01. Rerunning the DE now.",
    "Also raise the fold change to FACT fc_cutoff=2.0; to focus on strong effects.",
    "Fold-change cutoff is now 2.0. With p < 0.01 and FC 2.0 there are 412 DE genes.",
    "Better. Are the ECM themes still there?",
    "Yes. Collagen genes COL1A1, COL11A1 and POSTN remain at the top.",
    "What about the transporters?",
    "Most drop out at the stricter cutoffs. Only ABCC3 survives.",
    "Interesting. Note that for later.",
    "Noted ABCC3 as the single surviving transporter.",
    "Now check the survival split again with stricter grouping, top versus bottom tertile.",
    "Tertile comparison: hazard ratio 1.55 for FAP-high, p = 0.02.",
    "Still not convincing for a chemoresistance story.",
    "Agreed. The response annotation is sparse too; only 61 patients have treatment data.",
    // Single-cell look
    "Bring in a public single-cell atlas to see which cells express our markers.",
    "Loaded a PDAC single-cell atlas, about 57,000 cells after filtering.",
    "Where is FAP expressed?",
    "FAP is mostly in inflammatory and myofibroblastic CAF clusters.",
    "And PDGFRB?",
    "PDGFRB is high in CAFs but highest in a pericyte cluster near vessels.",
    "How large is that pericyte cluster?",
    "Around 2,100 cells, about 4% of the stroma.",
    "Does the pericyte signature track survival in bulk?",
    "A pericyte score built from PDGFRB, RGS5 and KCNJ8 gives hazard ratio 1.91, p = 0.004.",
    "That is much stronger than the FAP result.",
    "Yes, and it holds after adjusting for stage, grade and purity.",
    "Does it relate to the 61 treated patients?",
    "Among treated patients, pericyte-high tumours respond less often, 21% versus 47%.",
    "That could be the real story.",
    "It is consistent, though the treated subset is small.",
    // Pivot
    "Let's pivot. New working hypothesis: FACT hypothesis=PDGFR-β+ pericytes drive chemoresistance; and FAP+ CAFs are secondary.",
    "Updated. The focus moves from FAP+ CAFs to PDGFR-β+ pericytes.",
    "Keep FAP and ACTA2 in the panel for comparison.",
    "The marker panel still includes FAP, ACTA2 and PDGFRB.",
    "Make the threshold stricter for the pericyte analysis: FACT p_threshold=0.001; adjusted.",
    "Adjusted p < 0.001 is now the cutoff for all new tests.",
    "Rerun DE between pericyte-high and pericyte-low tumours.",
    "At p < 0.001 and FC 2.0 there are 187 DE genes.",
    "Top hits?",
    "Angiogenesis and vessel maturation genes: ANGPT2, ESM1, and several Notch targets.",
    "Lower the fold change a little to FACT fc_cutoff=1.8; so we do not miss Notch genes.",
    "Fold-change cutoff changed to 1.8. The DE list grows to 236 genes, now with HEY1 and HEYL.",
    "Good. Run pathway enrichment on the 236.",
    "Enrichment: angiogenesis, Notch signalling and hypoxia response are the top three.",
    "Hypoxia fits a drug-delivery barrier idea.",
    "Agreed, pericyte coverage could limit perfusion and drug access.",
    // Validation
    "Is there an independent cohort we can check?",
    "The CPTAC pancreatic cohort has 140 tumours with RNA data.",
    "Apply the same pericyte score there.",
    "In CPTAC the pericyte score gives hazard ratio 1.74, p = 0.009.",
    "And the FAP score in CPTAC?",
    "FAP-high has hazard ratio 1.18, p = 0.31, not significant.",
    "So the pivot holds up in validation.",
    "Yes. The pericyte signal replicates; the FAP signal does not.",
    "Check that the pericyte score is not just tracking vessel density.",
    "Adjusting for an endothelial score attenuates the hazard ratio to 1.62 but it stays significant.",
    "Good enough for now. Note it as a limitation.",
    "Added a limitation note about residual confounding with vascular density.",
    // Writing
    "Let's draft the results section outline.",
    "Outline: cohort description, initial FAP analysis, stricter thresholds, single-cell localization, pericyte pivot, validation.",
    "Mention that we started with FAP+ CAFs.",
    "The outline states the initial hypothesis was that FAP+ CAFs drive chemoresistance.",
    "Report the thresholds exactly as used at each stage.",
    "Stage one used p < 0.05, stage two p < 0.01, and the pericyte stage p < 0.001.",
    "And the fold-change history.",
    "Fold change went from 1.5 to 2.0, then 1.8 for the pericyte DE.",
    "Figure 1 should show all three markers across the atlas.",
    "Figure 1 will be a dot plot of FAP, ACTA2 and PDGFRB across stromal clusters.",
    "Figure 2: survival curves for the pericyte score in both cohorts.",
    "Figure 2 drafted with TCGA-PAAD on the left and CPTAC on the right.",
    "State the cohort size clearly in the legend.",
    "The legend reads: TCGA-PAAD, 178 samples; CPTAC, 140 tumours.",
    "What is our current hypothesis, in one sentence, for the abstract?",
    "PDGFR-β+ pericytes, rather than FAP+ CAFs, are associated with chemoresistance and poor survival in PDAC.",
    "Good. Save everything and we will continue with the methods next week.",
    "Saved. The analysis notebook and figures are in the project folder.",
];

pub fn baseline_scenario(counter: &TokenCounter) -> Vec<Message> {
    TURNS
        .iter()
        .enumerate()
        .map(|(i, t)| Message::new(i as u64, alternating_role(i as u64), *t, counter))
        .collect()
}
