#!/usr/bin/env python3

import unittest
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).parent.parent))

from batch import BATCH_DEFAULTS, BatchProcessor


def square_or_fail(x: int) -> int:
    if x == 3:
        raise ValueError("bad task")
    return x * x


class TestBatchProcessor(unittest.TestCase):

    def test_processor_initialization(self):
        """Test thread count is validated and capped"""
        self.assertEqual(BatchProcessor().threads, 1)
        self.assertEqual(BatchProcessor(1000).threads, BATCH_DEFAULTS["max_threads"])
        with self.assertRaises(ValueError):
            BatchProcessor(0)

    def test_results_keep_task_order(self):
        """Test parallel results come back in task order"""
        processor = BatchProcessor(4, label="order")
        results = processor.batch_process(lambda x: x * x, range(20))
        self.assertEqual(results, [x * x for x in range(20)])

    def test_strict_reraises_first_error(self):
        """Test strict mode re-raises a task failure"""
        processor = BatchProcessor(2)
        with self.assertRaises(ValueError):
            processor.batch_process(square_or_fail, range(6))

    def test_lenient_mode_fills_none(self):
        """Test lenient mode returns None for failed tasks"""
        processor = BatchProcessor(3)
        results = processor.batch_process(square_or_fail, range(6), strict=False)
        self.assertEqual(results, [0, 1, 4, None, 16, 25])
        self.assertEqual(processor.failures[0][0], 3)

    def test_get_stats(self):
        """Test processing statistics"""
        processor = BatchProcessor(1, label="stats")
        processor.batch_process(square_or_fail, range(5), strict=False)
        stats = processor.get_stats()
        self.assertEqual(stats["label"], "stats")
        self.assertEqual(stats["processed_count"], 4)
        self.assertEqual(stats["error_count"], 1)
        self.assertAlmostEqual(stats["success_rate"], 0.8)
        self.assertGreaterEqual(stats["elapsed"], 0.0)

    def test_empty_task_list(self):
        """Test an empty batch returns an empty list"""
        self.assertEqual(BatchProcessor(4).batch_process(lambda x: x, []), [])


if __name__ == '__main__':
    unittest.main()
