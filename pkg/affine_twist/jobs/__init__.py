# Jobs are to this package what spiders are to a crawler project: each one
# owns a command, carries its own custom_settings and yields items from run().
#
# Please refer to the documentation in README.md for how to add a job.

import importlib
import inspect
import logging
import pkgutil

from affine_twist.exceptions import MathError
from affine_twist.settings import JOB_MODULES, get_settings


class Job:
    name = None
    custom_settings = {}

    def __init__(self, settings=None, **kwargs):
        """
        Merge the job's custom_settings over the project settings and keep
        the command-line options as attributes.
        """
        self.settings = dict(settings if settings is not None else get_settings())
        self.settings.update(self.custom_settings)
        self.logger = logging.getLogger(f"affine_twist.jobs.{self.name}")
        for key, value in kwargs.items():
            setattr(self, key, value)

    def log(self, message, level=logging.DEBUG):
        self.logger.log(level, message)

    @property
    def trunc(self):
        return self.settings["DEFAULT_TRUNCATION"]

    @property
    def eps_degree(self):
        return self.settings["EPS_DEGREE"]

    def run(self):
        raise NotImplementedError(f"{type(self).__name__}.run is not defined")

    def errback(self, failure):
        self.log(f"{self.name} failed: {type(failure).__name__}: {failure}", logging.ERROR)
        raise failure


def load_jobs(modules=None):
    """Every Job subclass with a name, found in the listed packages."""
    jobs = {}
    for package_name in modules or JOB_MODULES:
        package = importlib.import_module(package_name)
        for info in pkgutil.iter_modules(package.__path__):
            module = importlib.import_module(f"{package_name}.{info.name}")
            for _, obj in inspect.getmembers(module, inspect.isclass):
                if issubclass(obj, Job) and obj is not Job and obj.name:
                    jobs[obj.name] = obj
    return jobs


def crawl(job, pipelines):
    """Run a job, passing each item through the pipelines; returns the item count."""
    count = 0
    try:
        for item in job.run():
            for pipeline in pipelines:
                item = pipeline.process_item(item, job)
            count += 1
    except MathError as exc:
        job.errback(exc)
    finally:
        for pipeline in pipelines:
            pipeline.close_job(job)
    job.log(f"{job.name}: {count} items", logging.INFO)
    return count
