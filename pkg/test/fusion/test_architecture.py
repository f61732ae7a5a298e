from unittest import TestCase

from fusion.architecture import (ARCHITECTURE_DIMS, PUBLISHED_PARAM_COUNTS, ArchitectureId, audit, layer_specs,
                                 param_count)


class TestArchitecture(TestCase):

    def test_closed_form_counts_match_published(self):
        for arch in ArchitectureId:
            with self.subTest(arch=arch):
                self.assertEqual(PUBLISHED_PARAM_COUNTS[arch], param_count(arch))

    def test_published_counts(self):
        self.assertEqual(266887, PUBLISHED_PARAM_COUNTS[ArchitectureId.SINGLE])
        self.assertEqual(267047, PUBLISHED_PARAM_COUNTS[ArchitectureId.EARLY_SMALL])
        self.assertEqual(812391, PUBLISHED_PARAM_COUNTS[ArchitectureId.EARLY_LARGE])
        self.assertEqual(796551, PUBLISHED_PARAM_COUNTS[ArchitectureId.LATE_CONCAT])
        self.assertEqual(275367, PUBLISHED_PARAM_COUNTS[ArchitectureId.LATE_CONV])
        self.assertEqual(272263, PUBLISHED_PARAM_COUNTS[ArchitectureId.LATE_ACC])

    def test_audit_passes(self):
        self.assertTrue(all(row.matches for row in audit()))
        self.assertEqual(len(ArchitectureId), len(audit()))

    def test_audit_detects_corrupted_dims(self):
        dims = dict(ARCHITECTURE_DIMS)
        dims[ArchitectureId.LATE_CONV] = dims[ArchitectureId.LATE_CONV]._replace(merge_filters=33)
        rows = {row.architecture: row for row in audit(dims)}
        self.assertFalse(rows[ArchitectureId.LATE_CONV].matches)
        self.assertTrue(rows[ArchitectureId.LATE_ACC].matches)

    def test_feature_length(self):
        self.assertEqual(32, ARCHITECTURE_DIMS[ArchitectureId.SINGLE].feature_length)

    def test_layer_table(self):
        specs = layer_specs(ArchitectureId.LATE_CONV)
        self.assertEqual(["stack0.conv(16)", "stack0.conv(32)", "stack1.conv(16)", "stack1.conv(32)",
                          "stack2.conv(16)", "stack2.conv(32)", "merge.conv1x1(32)", "fc(1024>256)", "fc(256>7)"],
                         [s.name for s in specs])
        self.assertEqual(32 * 96 + 32, specs[6].params)

    def test_parse(self):
        self.assertIs(ArchitectureId.LATE_ACC, ArchitectureId.parse("late-acc"))
        self.assertIs(ArchitectureId.LATE_ACC, ArchitectureId.parse(" LATE_ACC "))
        self.assertIs(ArchitectureId.SINGLE, ArchitectureId.parse("single"))
        self.assertRaises(ValueError, lambda: ArchitectureId.parse("late_sum"))
