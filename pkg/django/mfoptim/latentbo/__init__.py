"""
LatentBO django application and supporting classes.

Multi-fidelity Bayesian optimization with a latent-map Gaussian process
emulator, per-source noise estimation and cost-aware acquisition.

This file is part of LatentBO.

License:
    Copyright 2026 The LatentBO Project

    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
"""

import logging
import os

from lxml.etree import XMLSchema, XMLSchemaParseError, XMLSyntaxError, clear_error_log, parse

__version__ = '1.0.0'

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """
    Raised for configuration documents that are missing or inconsistent.
    """
    pass


class StoredConfig(object):
    """
    A run configuration represented on disk by an XML document. This
    class provides methods of reading the configuration file.

    An annotated example is in docs/config.dist.xml; the schema is
    docs/config.xsd.
    """

    def __init__(self, data, schema=None):
        """
        Open a stored configuration.

        @param data: An XML data document, optionally conforming to the schema.
        @keyword schema: Optional. An XSD schema document, describing the configuration.
        """
        if schema is not None:
            if not os.path.exists(schema):
                logger.warning('Configuration schema could not be found. Please check the path and try again.')
                raise ConfigError('Configuration schema "%s" does not exist.' % schema)

            self.schemafile = schema
        else:
            self.schemafile = None

        if not os.path.exists(data):
            logger.warning('Configuration data could not be found. Please check the path and try again.')
            raise ConfigError('Configuration file "%s" does not exist.' % data)

        self.datafile = data

        self.data = None

    def validate(self):
        """
        Validate the provided data file for correctness against the provided
        schema file.

        @return: A flag indicating if the data validates against the schema.
        """
        # clear any previous xml errors
        clear_error_log()
        if self.schemafile is not None:
            try:
                schdoc = parse(self.schemafile)
            except XMLSyntaxError as e:
                logger.warning('The schema XML file could not be parsed.')
                for item in e.error_log:
                    logger.info(item)

                return False

            try:
                theschema = XMLSchema(schdoc)
            except XMLSchemaParseError as e:
                logger.warning('The schema XML file was parsed, but it does not appear to be a valid XML Schema document.')
                for item in e.error_log:
                    logger.info(item)

                return False

        try:
            thedata = parse(self.datafile)
        except XMLSyntaxError as e:
            logger.warning('The data XML file could not be parsed.')
            for item in e.error_log:
                logger.info(item)

            return False

        if self.schemafile is not None:
            if theschema.validate(thedata):
                self.data = thedata
                return True

            logger.warning('The data does not conform to the provided schema.')
            for item in theschema.error_log:
                logger.info(item)

            return False

        self.data = thedata

        return True

    def get_node(self, node, parent=None):
        """
        Get a node in the XML data.

        @param node: The XPath to a node.
        @keyword parent: If provided, the XPath may be relative to this node.
        @returns: A single lxml.etree.Element object, or None if there are multiple or
            zero nodes found.
        """
        if self.data is None:
            return None

        if parent is None:
            nodes = self.data.xpath(node)
        else:
            nodes = parent.xpath(node)
        if len(nodes) != 1:
            return None

        return nodes[0]

    def filter_nodes(self, node_filter, parent=None):
        """
        Get a list of nodes from the XML data.

        @param node_filter: The XPath to a list of nodes.
        @keyword parent: If provided, the XPath may be relative to this node.
        @returns: A list of lxml.etree.Element objects.
        """
        if self.data is None:
            return None

        if parent is None:
            return self.data.xpath(node_filter)
        else:
            return parent.xpath(node_filter)

    def get_run(self):
        """
        @returns: The Run node: problem, budget, stopping and study settings.
        """
        return self.get_node('/LatentBO/Run')

    def get_emulator(self):
        """
        @returns: The Emulator node: training options.
        """
        return self.get_node('/LatentBO/Emulator')

    def get_search(self):
        """
        @returns: The Search node: inner acquisition search options.
        """
        return self.get_node('/LatentBO/Search')

    def get_problem(self):
        return self.get_node('/LatentBO/Problem')

    def filter_sources(self):
        """
        @returns: A list of the Source override nodes of the Problem.
        """
        problem = self.get_problem()
        if problem is None:
            return []
        return self.filter_nodes('Source', parent=problem)

    def get_dataset(self):
        return self.get_node('/LatentBO/Dataset')

    def has_dataset(self):
        """
        Does the configuration point at a dataset instead of a benchmark?
        """
        return self.get_dataset() is not None
