# Item pipelines: every item a job yields goes through each enabled pipeline.
#
# JsonPipeline writes to standard output; CsvFeedPipeline collects rows and
# writes them with pandas once the job is closed.

import json
import logging

import pandas as pd

logger = logging.getLogger(__name__)


class JsonPipeline:
    def __init__(self, stream, pretty=False, indent=2):
        self.stream = stream
        self.pretty = pretty
        self.indent = indent
        self.count = 0

    def process_item(self, item, job):
        if self.pretty:
            self.stream.write(item.pretty() + "\n")
        else:
            self.stream.write(json.dumps(item.to_dict(), indent=self.indent) + "\n")
        self.count += 1
        return item

    def close_job(self, job):
        logger.debug(f"{job.name}: wrote {self.count} items")


class CsvFeedPipeline:
    def __init__(self, path, overwrite=True):
        self.path = path
        self.overwrite = overwrite
        self.rows = []

    def process_item(self, item, job):
        self.rows.extend(item.rows())
        return item

    def close_job(self, job):
        if not self.rows:
            logger.info(f"{job.name}: nothing to write to {self.path}")
            return
        frame = pd.DataFrame(self.rows)
        frame.to_csv(self.path, index=False, mode="w" if self.overwrite else "a")
        logger.info(f"{job.name}: wrote {len(frame)} rows to {self.path}")


def open_pipelines(stream, settings, pretty=False, csv_path=None):
    """The pipelines enabled for one run, in the order items pass through them."""
    feed = settings.get("FEEDS", {})
    pipelines = [JsonPipeline(stream, pretty=pretty, indent=feed.get("stdout", {}).get("indent", 2))]
    if csv_path:
        pipelines.append(CsvFeedPipeline(csv_path, overwrite=feed.get("csv", {}).get("overwrite", True)))
    return pipelines
